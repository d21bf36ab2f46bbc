#include "kolmo/verify.hpp"

#include "kolmo/cauchy.hpp"
#include "kolmo/parallel.hpp"
#include "kolmo/quadrature.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <sstream>

namespace kolmo {

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string num(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    switch (ch) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(ch) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", ch);
          out += buf;
        } else {
          out += ch;
        }
    }
  }
  return out + "\"";
}

// Lebesgue-weighted tensor Gauss-Hermite rule for N(m, L L^T).
struct GaussRule {
  std::vector<Vec> pts;
  std::vector<double> w;  // probability weights
};

GaussRule gauss_rule(const Vec& m, const Mat& L, int order) {
  const int N = static_cast<int>(m.size());
  const Rule1D& gh = gauss_hermite(order);
  GaussRule r;
  std::vector<int> idx(static_cast<std::size_t>(N), 0);
  do {
    Vec z(N);
    double w = 1.0;
    for (int k = 0; k < N; ++k) {
      const auto j = static_cast<std::size_t>(idx[static_cast<std::size_t>(k)]);
      z(k) = gh.x[j];
      w *= gh.w[j];
    }
    r.pts.push_back(m + L * z);
    r.w.push_back(w);
  } while (next_multi_index(idx, order));
  return r;
}

Mat chol_lower(const Mat& S) {
  Eigen::LLT<Mat> llt(S);
  if (llt.info() != Eigen::Success) throw NumericalError("covariance not positive definite");
  return llt.matrixL();
}

int kernel_panels(const CoefficientField& c) { return c.a2_constant() ? 1 : 64; }

// Covariance of the parametrix with target (T, v) over a horizon h.
Mat frozen_cov(const DensityEvaluator& p, double h, double T, const Vec& v) {
  const PanelTable tab(p.drift(), h, kernel_panels(p.coeffs()));
  return covariance_frozen_table(p.coeffs(), tab, T, v);
}

double rel_change(double a, double b) {
  const double s = std::max(std::abs(a), std::abs(b));
  return s > 0.0 ? std::abs(a - b) / s : 0.0;
}

}  // namespace

const char* status_name(Status s) {
  switch (s) {
    case Status::Pass: return "pass";
    case Status::Fail: return "fail";
    default: return "inconclusive";
  }
}

double VerificationReport::get(const std::string& key) const {
  for (const auto& [k, v] : measured)
    if (k == key) return v;
  return kNaN;
}

void VerificationReport::set(const std::string& key, double v) {
  for (auto& [k, old] : measured)
    if (k == key) {
      old = v;
      return;
    }
  measured.emplace_back(key, v);
}

std::string report_json(const VerificationReport& r, int indent) {
  const std::string pad(static_cast<std::size_t>(indent), ' ');
  const std::string pad2 = pad + pad;
  std::ostringstream os;
  os << "{\n";
  os << pad << "\"check_name\": " << quoted(r.check_name) << ",\n";
  os << pad << "\"status\": " << quoted(status_name(r.status)) << ",\n";
  os << pad << "\"measured\": {";
  for (std::size_t i = 0; i < r.measured.size(); ++i)
    os << (i ? "," : "") << "\n" << pad2 << quoted(r.measured[i].first) << ": " << num(r.measured[i].second);
  os << (r.measured.empty() ? "" : "\n" + pad) << "},\n";
  os << pad << "\"tolerance\": " << num(r.tolerance) << ",\n";
  os << pad << "\"samples\": " << r.samples << ",\n";
  os << pad << "\"notes\": " << quoted(r.notes) << "\n";
  os << "}";
  return os.str();
}

std::string reports_json(const std::vector<VerificationReport>& rs, int indent) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < rs.size(); ++i) {
    std::string one = report_json(rs[i], indent);
    // indent nested object by one level
    std::string shifted;
    for (char ch : one) {
      shifted += ch;
      if (ch == '\n') shifted += std::string(static_cast<std::size_t>(indent), ' ');
    }
    os << (i ? ",\n" : "\n") << std::string(static_cast<std::size_t>(indent), ' ') << shifted;
  }
  os << (rs.empty() ? "]" : "\n]") << "\n";
  return os.str();
}

std::string reports_table_csv(const std::vector<VerificationReport>& rs) {
  std::ostringstream os;
  for (const auto& r : rs) {
    if (r.table.empty()) continue;
    os << "check_name";
    for (const auto& h : r.table_header) os << "," << h;
    os << "\n";
    for (const auto& row : r.table) {
      os << r.check_name;
      for (double v : row) os << "," << num(v);
      os << "\n";
    }
  }
  return os.str();
}

FieldEval ScaledDensity::p(double t, const Vec& x, double T, const Vec& y, int want) const {
  FieldEval e = base_.p(t, x, T, y, want);
  e.value *= factor_;
  e.grad *= factor_;
  e.hess *= factor_;
  return e;
}

VerificationReport check_chapman_kolmogorov(const DensityEvaluator& p, double t, const Vec& x, double s, double T,
                                            const Vec& y, int gh_order) {
  if (!(t < s && s < T)) throw ConfigError("chapman-kolmogorov: need t < s < T");
  if (gh_order < 4) throw ConfigError("chapman-kolmogorov: gh_order must be >= 4");
  const Drift& drift = p.drift();
  VerificationReport r;
  r.check_name = "chapman_kolmogorov";
  const double lhs = p.p(t, x, T, y, kWantValue).value;

  // Bridge envelope: source kernel in eta around e^{(s-t)B}x, target kernel pulled back to time s.
  const double h1 = s - t, h2 = T - s;
  const Vec m1 = drift.exp(h1) * x;
  const Mat C1 = frozen_cov(p, h1, s, m1);
  const Mat E2inv = drift.exp(-h2);
  const Mat H2 = E2inv * frozen_cov(p, h2, T, y) * E2inv.transpose();
  const Vec c2 = E2inv * y;
  const Mat C1i = C1.inverse(), H2i = H2.inverse();
  Mat S = (C1i + H2i).inverse();
  S = (0.5 * (S + S.transpose())).eval();
  const Vec m = S * (C1i * m1 + H2i * c2);
  const Mat L = chol_lower(S);

  auto integral = [&](int order) {
    const GaussRule rule = gauss_rule(m, L, order);
    std::vector<double> parts(rule.pts.size());
    parallel_for(rule.pts.size(), [&](std::size_t b) {
      const Vec& eta = rule.pts[b];
      const double env = gauss_density(S, eta - m);
      parts[b] = rule.w[b] * p.p(t, x, s, eta, kWantValue).value * p.p(s, eta, T, y, kWantValue).value / env;
    });
    return pairwise_sum(parts);
  };
  const double rhs = integral(gh_order);
  const double rhs_coarse = integral(gh_order - 2);
  const double gh_diff = std::abs(rhs - rhs_coarse) / std::max(std::abs(rhs), 1e-300);
  const double composed = 3.0 * p.tolerance() + gh_diff;
  const double err = std::abs(rhs - lhs) / std::max(std::abs(lhs), 1e-300);
  r.set("lhs", lhs);
  r.set("rhs", rhs);
  r.set("relative_error", err);
  r.set("composed_tolerance", composed);
  r.set("gh_difference", gh_diff);
  r.tolerance = 3.0 * composed;
  r.samples = static_cast<long>(std::pow(gh_order, drift.N()) + std::pow(gh_order - 2, drift.N()));
  r.status = err <= r.tolerance ? Status::Pass : Status::Fail;
  std::ostringstream os;
  os << "t=" << t << " s=" << s << " T=" << T << "; Gauss-Hermite orders " << gh_order << " and " << gh_order - 2
     << " on the product envelope";
  r.notes = os.str();
  return r;
}

VerificationReport check_mass(const DensityEvaluator& p, double abar, double t, const Vec& x, double T, int gh_order,
                              double rel_tol) {
  if (!(t < T)) throw ConfigError("mass: need t < T");
  if (gh_order < 4) throw ConfigError("mass: gh_order must be >= 4");
  const Drift& drift = p.drift();
  const double h = T - t;
  const Vec m = drift.exp(h) * x;
  const Mat C = frozen_cov(p, h, T, m);
  const Mat L = chol_lower(C);
  auto integral = [&](int order) {
    const GaussRule rule = gauss_rule(m, L, order);
    std::vector<double> parts(rule.pts.size());
    parallel_for(rule.pts.size(), [&](std::size_t b) {
      const Vec& y = rule.pts[b];
      parts[b] = rule.w[b] * p.p(t, x, T, y, kWantValue).value / gauss_density(C, y - m);
    });
    return pairwise_sum(parts);
  };
  const double mass = integral(gh_order);
  const double coarse = integral(gh_order - 2);
  const double expected = std::exp(abar * h);
  VerificationReport r;
  r.check_name = "mass";
  r.set("mass", mass);
  r.set("expected", expected);
  r.set("relative_error", std::abs(mass - expected) / expected);
  r.set("gh_difference", std::abs(mass - coarse) / expected);
  r.tolerance = rel_tol * expected;
  r.samples = static_cast<long>(std::pow(gh_order, drift.N()));
  r.status = std::abs(mass - expected) <= r.tolerance ? Status::Pass : Status::Fail;
  std::ostringstream os;
  os << "abar=" << abar << " T-t=" << h << "; envelope: parametrix covariance frozen at e^{(T-t)B}x";
  r.notes = os.str();
  return r;
}

namespace {

struct BoundsFit {
  std::vector<double> s0, s1, s2;  // per horizon sup-ratios
  std::vector<double> cbar;        // per mu_bar candidate
  double C0 = 0, C1 = 0, C2 = 0;
  bool negative = false;
  long resolved = 0;  // points entering the lower bound
};

BoundsFit fit_bounds(const DensityEvaluator& p, const BoundsGrid& g, int points, double mu_eps,
                     const std::vector<double>& mubars) {
  const Drift& drift = p.drift();
  const BlockStructure& bs = drift.structure();
  const int N = drift.N();
  BoundsFit f;
  f.cbar.assign(mubars.size(), std::numeric_limits<double>::infinity());
  const std::uint64_t offset = 1 + g.seed % 100000;
  for (double h : g.horizons) {
    const double t = g.T - h;
    const Mat Einv = drift.exp(-h);
    const Mat D = dilation(std::sqrt(h), bs);
    const Mat Ch = covariance_const(1.0, h, drift);
    struct Slot {
      double r0 = 0, r1 = 0, r2 = 0, value = 0;
      bool resolved = false;
      std::vector<double> low;
    };
    const double G0 = gauss_density(mu_eps * Ch, Vec::Zero(N));
    const double floor = 10.0 * p.tolerance();
    std::vector<Slot> slots(static_cast<std::size_t>(points));
    parallel_for(slots.size(), [&](std::size_t k) {
      Vec z(N);
      for (int i = 0; i < N; ++i) z(i) = g.box * (2.0 * halton(offset + k, i) - 1.0);
      const Vec dz = D * z;
      const Vec x = Einv * (g.y - dz);
      const FieldEval e = p.p(t, x, g.T, g.y, kWantGrad | kWantHess);
      const double G = gauss_density(mu_eps * Ch, dz);
      Slot& s = slots[k];
      s.value = e.value;
      s.r0 = std::abs(e.value) / G;
      s.r1 = e.grad.cwiseAbs().maxCoeff() / G;
      s.r2 = e.hess.cwiseAbs().maxCoeff() / G;
      s.resolved = G >= floor * G0;
      for (double mb : mubars) s.low.push_back(e.value / gauss_density(mb * Ch, dz));
    });
    double a = 0, b = 0, c = 0;
    for (const Slot& s : slots) {
      a = std::max(a, s.r0);
      b = std::max(b, s.r1);
      c = std::max(c, s.r2);
      if (s.value < 0) f.negative = true;
      if (!s.resolved) continue;
      ++f.resolved;
      for (std::size_t m = 0; m < mubars.size(); ++m) f.cbar[m] = std::min(f.cbar[m], s.low[m]);
    }
    f.s0.push_back(a);
    f.s1.push_back(b);
    f.s2.push_back(c);
    f.C0 = std::max(f.C0, a);
    f.C1 = std::max(f.C1, b * std::sqrt(h));
    f.C2 = std::max(f.C2, c * h);
  }
  return f;
}

}  // namespace

VerificationReport check_gaussian_bounds(const DensityEvaluator& p, const BoundsGrid& grid, double eps,
                                         double slope_tol, std::vector<double> mu_bar_candidates,
                                         double stability_tol) {
  if (grid.horizons.size() < 2) throw ConfigError("gaussian bounds: need at least two horizons");
  if (grid.points < 1) throw ConfigError("gaussian bounds: points must be >= 1");
  if (grid.y.size() != p.drift().N()) throw ConfigError("gaussian bounds: y has the wrong dimension");
  const double mu = p.coeffs().mu();
  if (mu_bar_candidates.empty()) mu_bar_candidates = {1.0 / mu, 0.5 / mu, 0.25 / mu};
  const BoundsFit base = fit_bounds(p, grid, grid.points, mu + eps, mu_bar_candidates);
  const BoundsFit fine = fit_bounds(p, grid, 2 * grid.points, mu + eps, mu_bar_candidates);

  std::size_t best = 0;
  for (std::size_t m = 1; m < mu_bar_candidates.size(); ++m)
    if (fine.cbar[m] > fine.cbar[best]) best = m;

  VerificationReport r;
  r.check_name = "gaussian_bounds";
  const double sl0 = loglog_slope(grid.horizons, fine.s0);
  const double sl1 = loglog_slope(grid.horizons, fine.s1);
  const double sl2 = loglog_slope(grid.horizons, fine.s2);
  r.set("C", fine.C0);
  r.set("C_grad", fine.C1);
  r.set("C_hess", fine.C2);
  r.set("epsilon", eps);
  r.set("slope_value", sl0);
  r.set("slope_grad", sl1);
  r.set("slope_hess", sl2);
  r.set("mu_bar", mu_bar_candidates[best]);
  r.set("c_bar", fine.cbar[best]);
  r.set("lower_bound_points", static_cast<double>(fine.resolved));
  const double st = std::max({rel_change(base.C0, fine.C0), rel_change(base.C1, fine.C1),
                              rel_change(base.C2, fine.C2), rel_change(base.cbar[best], fine.cbar[best])});
  r.set("refinement_change", st);
  r.tolerance = slope_tol;
  r.samples = static_cast<long>(3 * grid.points * grid.horizons.size());
  const bool slopes_ok = std::abs(sl0) <= slope_tol && std::abs(sl1 + 0.5) <= slope_tol && std::abs(sl2 + 1.0) <= slope_tol;
  const bool ok = slopes_ok && fine.cbar[best] > 0.0 && st <= stability_tol;
  r.status = ok ? Status::Pass : Status::Fail;
  std::ostringstream os;
  os << "grid: " << grid.horizons.size() << " horizons x " << grid.points << " (and " << 2 * grid.points
     << ") dilation-scaled points, box " << grid.box << "; expected slopes 0, -0.5, -1";
  os << "; c_bar over points with Gamma^{mu+eps} >= " << 10.0 * p.tolerance() << " x its peak";
  if (fine.negative) os << "; negative p values on the grid (below resolution)";
  r.notes = os.str();
  r.table_header = {"T_minus_t", "sup_p_ratio", "sup_grad_ratio", "sup_hess_ratio"};
  for (std::size_t i = 0; i < grid.horizons.size(); ++i)
    r.table.push_back({grid.horizons[i], fine.s0[i], fine.s1[i], fine.s2[i]});
  return r;
}

double residual_along_Y(const ScalarFn& u, const ScalarFn& Au, const ScalarFn& f, const Drift& drift, double t,
                        const Vec& x, double s, int steps) {
  if (!(t < s)) throw ConfigError("residual: need t < s");
  if (steps < 1) throw ConfigError("residual: steps must be >= 1");
  const double dt = (s - t) / steps;
  std::vector<double> parts(static_cast<std::size_t>(steps));
  parallel_for(parts.size(), [&](std::size_t k) {
    const double tau = t + (static_cast<double>(k) + 0.5) * dt;
    const Vec z = drift.exp(tau - t) * x;
    double v = Au(tau, z);
    if (f) v -= f(tau, z);
    parts[k] = dt * v;
  });
  const double lhs = u(s, drift.exp(s - t) * x);
  return std::abs(lhs - u(t, x) + pairwise_sum(parts));
}

ScalarFn generator_applied(const DensityEvaluator& p, double T, const Vec& y) {
  return [&p, T, y](double t, const Vec& x) {
    const CoefficientField& c = p.coeffs();
    const FieldEval e = p.p(t, x, T, y, kWantGrad | kWantHess);
    double v = 0.5 * c.a2(t, x).cwiseProduct(e.hess).sum();
    if (!c.a1_zero()) v += c.a1(t, x).dot(e.grad);
    v += c.a0(t, x) * e.value;
    return v;
  };
}

VerificationReport check_residual(const DensityEvaluator& p, double t, const Vec& x, double s, double T,
                                  const Vec& y, int steps, double factor) {
  if (!(t < s && s < T)) throw ConfigError("residual: need t < s < T");
  if (steps < 2) throw ConfigError("residual: steps must be >= 2");
  const Drift& drift = p.drift();
  const ScalarFn u = [&](double tt, const Vec& xx) { return p.p(tt, xx, T, y, kWantValue).value; };
  const ScalarFn Au = generator_applied(p, T, y);
  const double res = residual_along_Y(u, Au, {}, drift, t, x, s, steps);
  const double res_half = residual_along_Y(u, Au, {}, drift, t, x, s, steps / 2);
  const double u0 = std::abs(u(t, x)), u1 = std::abs(u(s, drift.exp(s - t) * x));
  // Size of the integral term, from a coarse midpoint sum of |Au|.
  double integral_scale = 0.0;
  const int coarse = std::max(2, steps / 4);
  for (int k = 0; k < coarse; ++k) {
    const double tau = t + (k + 0.5) * (s - t) / coarse;
    integral_scale += std::abs(Au(tau, drift.exp(tau - t) * x)) * (s - t) / coarse;
  }
  const double scale = std::max({u0, u1, integral_scale});
  // Signed Richardson estimate is unavailable from absolute residuals; bound by their difference.
  const double midpoint_err = std::abs(res - res_half) / 3.0;
  const double composed = p.tolerance() * scale + midpoint_err;
  VerificationReport r;
  r.check_name = "residual_along_Y";
  r.set("residual", res);
  r.set("residual_half_steps", res_half);
  r.set("scale", scale);
  r.set("relative_residual", res / scale);
  r.set("composed_tolerance", composed);
  r.tolerance = factor * composed;
  r.samples = steps + steps / 2 + coarse;
  r.status = res <= r.tolerance ? Status::Pass : Status::Fail;
  std::ostringstream os;
  os << "midpoint rule with " << steps << " steps on [" << t << ", " << s << "], target T=" << T;
  r.notes = os.str();
  return r;
}

const char* holder_kind_name(HolderKind k) {
  switch (k) {
    case HolderKind::Cd: return "C_d";
    case HolderKind::CY: return "C_Y";
    case HolderKind::CB0: return "C_B0";
    case HolderKind::CB1: return "C_B1";
    default: return "C_B2";
  }
}

HolderKind parse_holder_kind(const std::string& s) {
  if (s == "C_d" || s == "Cd") return HolderKind::Cd;
  if (s == "C_Y" || s == "CY") return HolderKind::CY;
  if (s == "C_B0" || s == "CB0") return HolderKind::CB0;
  if (s == "C_B1" || s == "CB1") return HolderKind::CB1;
  if (s == "C_B2" || s == "CB2") return HolderKind::CB2;
  throw ConfigError("unknown Hölder semi-norm kind '" + s + "' (expected C_d, C_Y, C_B0, C_B1, C_B2)");
}

HolderEstimate holder_seminorm(const JetFn& f, HolderKind kind, const Drift& drift, double exponent, int samples,
                               std::uint64_t seed, const HolderDomain& dom, const ScalarFn& f_Y) {
  if (samples < 1) throw ConfigError("holder: samples must be >= 1");
  if (!(dom.t1 >= dom.t0)) throw ConfigError("holder: empty time range");
  const double hi = kind == HolderKind::CY ? 2.0 : 1.0;
  if (!(exponent > 0.0 && exponent <= hi)) throw ConfigError("holder: exponent outside the admissible range");
  if (kind == HolderKind::CB2 && !f_Y) throw ConfigError("holder: C_B2 needs the a.e.-Lie derivative");
  const int N = drift.N(), d = drift.d();
  const BlockStructure& bs = drift.structure();
  const Vec center = dom.center.size() == N ? dom.center : Vec::Zero(N);
  const Mat Dsc = dilation(dom.scale, bs);

  struct Draw {
    double t, s;
    Vec x, xb;
    std::vector<double> hs;
  };
  std::mt19937_64 rng(seed);
  auto U = [&] { return unit_from_bits(rng()); };
  std::vector<Draw> draws(static_cast<std::size_t>(samples));
  for (Draw& dr : draws) {
    dr.t = dom.t0 + (dom.t1 - dom.t0) * U();
    double ds = dom.max_dt * (2.0 * U() - 1.0);
    dr.s = std::clamp(dr.t + ds, dom.t0, dom.t1);
    Vec u(N), v(N);
    for (int i = 0; i < N; ++i) u(i) = 2.0 * U() - 1.0;
    for (int i = 0; i < N; ++i) v(i) = 2.0 * U() - 1.0;
    for (int i = 0; i < d; ++i) {
      double h = dom.scale * (2.0 * U() - 1.0);
      if (h == 0.0) h = dom.scale * 0.5;
      dr.hs.push_back(h);
    }
    const Vec c = dom.follow_flow ? Vec(drift.exp(dr.t - dom.T_flow) * center) : center;
    dr.x = c + Dsc * u;
    dr.xb = dr.x + Dsc * v;
  }

  const bool need_hess = kind == HolderKind::CB1 || kind == HolderKind::CB2;
  const int want = need_hess ? (kWantGrad | kWantHess) : kWantValue;
  // Quotient slots. C_d semi-norms sum the per-direction sups, so every direction k < d has its own slot.
  const int s_val_cd = 0;                       // [k]
  const int s_val_cy = s_val_cd + d;            // value C_Y^a, value C_Y^{1+a}
  const int s_grad_cd = s_val_cy + 2;           // [j * d + k]
  const int s_grad_cy = s_grad_cd + d * d;      // [2 j + {0: a, 1: 1+a}]
  const int s_hess_cd = s_grad_cy + 2 * d;      // [(j * d + l) * d + k]
  const int s_hess_cy = s_hess_cd + d * d * d;  // [j * d + l]
  const int s_fy = s_hess_cy + d * d;
  const int nslots = s_fy + 1;
  std::vector<std::vector<double>> q(draws.size(), std::vector<double>(static_cast<std::size_t>(nslots), 0.0));
  const double a = exponent;
  parallel_for(draws.size(), [&](std::size_t n) {
    const Draw& dr = draws[n];
    auto slot = [&](int k) -> double& { return q[n][static_cast<std::size_t>(k)]; };
    const FieldEval base = f(dr.t, dr.x, want);
    for (int k = 0; k < d; ++k) {
      Vec xs = dr.x;
      const double h = dr.hs[static_cast<std::size_t>(k)];
      xs(k) += h;
      const double ah = std::pow(std::abs(h), a);
      const FieldEval sh = f(dr.t, xs, want);
      slot(s_val_cd + k) = std::abs(sh.value - base.value) / ah;
      if (!need_hess) continue;
      for (int j = 0; j < d; ++j) {
        slot(s_grad_cd + j * d + k) = std::abs(sh.grad(j) - base.grad(j)) / ah;
        for (int l = 0; l < d; ++l)
          slot(s_hess_cd + (j * d + l) * d + k) = std::abs(sh.hess(j, l) - base.hess(j, l)) / ah;
      }
    }
    if (dr.s != dr.t) {
      const Vec xf = drift.exp(dr.s - dr.t) * dr.x;
      const FieldEval fl = f(dr.s, xf, want);
      const double dt = std::abs(dr.s - dr.t);
      const double pa = std::pow(dt, 0.5 * a), pa1 = std::pow(dt, 0.5 * (1.0 + a));
      slot(s_val_cy) = std::abs(fl.value - base.value) / pa;
      slot(s_val_cy + 1) = std::abs(fl.value - base.value) / pa1;
      if (need_hess) {
        for (int j = 0; j < d; ++j) {
          const double dg = std::abs(fl.grad(j) - base.grad(j));
          slot(s_grad_cy + 2 * j) = dg / pa;
          slot(s_grad_cy + 2 * j + 1) = dg / pa1;
          for (int l = 0; l < d; ++l) slot(s_hess_cy + j * d + l) = std::abs(fl.hess(j, l) - base.hess(j, l)) / pa;
        }
      }
    }
    if (kind == HolderKind::CB2) {
      const double dn = anisotropic_norm(Vec(dr.xb - dr.x), bs);
      if (dn > 0.0) slot(s_fy) = std::abs(f_Y(dr.t, dr.xb) - f_Y(dr.t, dr.x)) / std::pow(dn, a);
    }
  });

  std::vector<double> sup(static_cast<std::size_t>(nslots), 0.0);
  for (const auto& row : q)
    for (std::size_t k = 0; k < sup.size(); ++k) sup[k] = std::max(sup[k], row[k]);
  auto at = [&](int k) { return sup[static_cast<std::size_t>(k)]; };
  auto val_cd = [&] {
    double v = 0.0;
    for (int k = 0; k < d; ++k) v += at(s_val_cd + k);
    return v;
  };
  auto grad_cd = [&](int j) {
    double v = 0.0;
    for (int k = 0; k < d; ++k) v += at(s_grad_cd + j * d + k);
    return v;
  };
  auto hess_cd = [&](int j, int l) {
    double v = 0.0;
    for (int k = 0; k < d; ++k) v += at(s_hess_cd + (j * d + l) * d + k);
    return v;
  };

  HolderEstimate est;
  est.kind = kind;
  est.pairs_used = samples;
  double v = 0.0;
  switch (kind) {
    case HolderKind::Cd:
      v = val_cd();
      break;
    case HolderKind::CY:
      v = at(s_val_cy);
      break;
    case HolderKind::CB0:
      v = at(s_val_cy) + val_cd();
      break;
    case HolderKind::CB1:
      v = at(s_val_cy + 1);
      for (int j = 0; j < d; ++j) v += at(s_grad_cy + 2 * j) + grad_cd(j);
      break;
    case HolderKind::CB2:
      for (int j = 0; j < d; ++j) v += at(s_grad_cy + 2 * j + 1);
      for (int j = 0; j < d; ++j)
        for (int l = 0; l < d; ++l) v += at(s_hess_cy + j * d + l) + hess_cd(j, l);
      v += at(s_fy);
      break;
  }
  est.value = v;
  return est;
}

VerificationReport check_expm_block_orders(const Drift& drift) {
  const BlockStructure& s = drift.structure();
  const int r = s.r();
  VerificationReport rep;
  rep.check_name = "expm_block_orders";
  rep.table_header = {"block_h", "block_k", "t", "ratio"};
  const double ts[3] = {1e-2, 1e-3, 1e-4};
  bool ok = true;
  double worst_spread = 1.0;
  auto start = [&](int j) { return j == 0 ? 0 : s.cumdims[static_cast<std::size_t>(j - 1)]; };
  for (int h = 1; h <= r; ++h) {
    for (int k = 0; k < h; ++k) {
      const int n = h - k;
      double mn = std::numeric_limits<double>::infinity(), mx = 0.0;
      for (double t : ts) {
        const Mat E = drift.exp(t);
        const double blk = E.block(start(h), start(k),
                                   s.dims[static_cast<std::size_t>(h)], s.dims[static_cast<std::size_t>(k)])
                               .cwiseAbs()
                               .maxCoeff();
        const double ratio = blk / std::pow(t, n);
        rep.table.push_back({static_cast<double>(h), static_cast<double>(k), t, ratio});
        mn = std::min(mn, ratio);
        mx = std::max(mx, ratio);
      }
      const double spread = mn > 0.0 ? mx / mn : std::numeric_limits<double>::infinity();
      worst_spread = std::max(worst_spread, spread);
      if (!(spread < 10.0)) ok = false;
    }
  }
  // B^n has zero blocks (h, k) for h > k + n.
  Mat Bn = Mat::Identity(drift.N(), drift.N());
  double max_forbidden = 0.0;
  for (int n = 1; n <= r + 1; ++n) {
    Bn = (Bn * drift.B()).eval();
    for (int h = 0; h <= r; ++h)
      for (int k = 0; k + n < h; ++k)
        max_forbidden = std::max(
            max_forbidden, Bn.block(start(h), start(k),
                                    s.dims[static_cast<std::size_t>(h)], s.dims[static_cast<std::size_t>(k)])
                               .cwiseAbs()
                               .maxCoeff());
  }
  if (max_forbidden != 0.0) ok = false;
  rep.set("worst_ratio_spread", worst_spread);
  rep.set("max_forbidden_block", max_forbidden);
  rep.tolerance = 10.0;
  rep.samples = static_cast<long>(rep.table.size());
  rep.status = ok ? Status::Pass : Status::Fail;
  rep.notes = "ratios |(e^{tB})_{hk}|_max / t^{h-k} at t = 1e-2, 1e-3, 1e-4; pass iff max/min < 10";
  return rep;
}

}  // namespace kolmo
