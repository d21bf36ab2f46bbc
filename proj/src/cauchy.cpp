#include "kolmo/cauchy.hpp"

#include "kolmo/quadrature.hpp"

#include <cmath>
#include <numbers>

namespace kolmo {

CauchySolver::CauchySolver(const DensityEvaluator& p, CauchyProblem cp, CauchyConfig cfg)
    : p_(p), cp_(std::move(cp)), cfg_(cfg) {
  if (cfg_.gh_order < 2 || cfg_.gh_order > 40) throw ConfigError("cauchy: gh_order must be in [2, 40]");
  if (cfg_.time_nodes < 1 || cfg_.time_nodes > 64) throw ConfigError("cauchy: time_nodes must be in [1, 64]");
  if (!(cfg_.eps_factor >= 0.0)) throw ConfigError("cauchy: eps_factor must be >= 0");
  if (!(cp_.growth_C >= 0.0)) throw ConfigError("cauchy: growth constant must be >= 0");
  const CoefficientField& c = p_.coeffs();
  fast_ = c.a2_constant() && c.a1_zero() && c.a0_constant();
  has_f_ = !(cp_.f.is_constant() && cp_.f.constant_value() == 0.0);
}

void CauchySolver::check_growth(double h) const {
  if (cp_.growth_C <= 0.0) return;
  const Mat C = covariance_const(1.0, h, p_.drift());
  Eigen::SelfAdjointEigenSolver<Mat> es(C);
  if (!(2.0 * cp_.growth_C * es.eigenvalues().maxCoeff() < 1.0)) throw ConfigError("horizon too long for declared growth");
}

double CauchySolver::spatial(double t, const Vec& x, double s, const Expr& w) const {
  const CoefficientField& c = p_.coeffs();
  const Drift& drift = p_.drift();
  const int N = drift.N();
  const double h = s - t;
  const Mat E = drift.exp(h);
  const Vec mean = E * x;
  Mat cov;
  double factor = 1.0;
  if (fast_) {
    // Exact: the envelope is the kernel itself.
    const PanelTable tab(drift, h, 1);
    cov = covariance_frozen_table(c, tab, s, mean);
    factor = std::exp(c.a0_constant_value() * h);
  } else {
    cov = (c.mu() * (1.0 + cfg_.eps_factor)) * covariance_const(1.0, h, drift);
  }
  Eigen::LLT<Mat> llt(cov);
  if (llt.info() != Eigen::Success) throw NumericalError("covariance not positive definite");
  const Mat L = llt.matrixL();
  const Rule1D& gh = gauss_hermite(cfg_.gh_order);
  std::vector<int> idx(static_cast<std::size_t>(N), 0);
  std::vector<double> parts;
  do {
    Vec z(N);
    double wt = 1.0;
    for (int k = 0; k < N; ++k) {
      const auto j = static_cast<std::size_t>(idx[static_cast<std::size_t>(k)]);
      z(k) = gh.x[j];
      wt *= gh.w[j];
    }
    const Vec y = mean + L * z;
    const double wy = w.eval(s, y);
    if (wy == 0.0) continue;
    if (fast_) {
      parts.push_back(wt * wy);
    } else {
      const double env = gauss_density(cov, y - mean);
      parts.push_back(wt * wy * p_.p(t, x, s, y, kWantValue).value / env);
    }
  } while (next_multi_index(idx, cfg_.gh_order));
  return factor * pairwise_sum(parts);
}

double CauchySolver::solve(double t, const Vec& x) const {
  const double h = cp_.T - t;
  if (!(h > 0.0)) throw ConfigError("cauchy: need t < T");
  if (x.size() != p_.drift().N()) throw ConfigError("cauchy: x has the wrong dimension");
  check_growth(h);
  double u = spatial(t, x, cp_.T, cp_.g);
  if (has_f_) {
    const Rule1D& gl = gauss_legendre(cfg_.time_nodes);
    std::vector<double> parts;
    for (std::size_t j = 0; j < gl.x.size(); ++j) {
      const double s = t + 0.5 * h * (gl.x[j] + 1.0);
      parts.push_back(0.5 * h * gl.w[j] * spatial(t, x, s, cp_.f));
    }
    u -= pairwise_sum(parts);
  }
  return u;
}

double loglog_slope(const std::vector<double>& h, const std::vector<double>& v) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < h.size() && i < v.size(); ++i) {
    if (!(h[i] > 0.0) || !(v[i] > 0.0)) continue;
    const double a = std::log(h[i]), b = std::log(v[i]);
    sx += a;
    sy += b;
    sxx += a * a;
    sxy += a * b;
    ++n;
  }
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  const double den = n * sxx - sx * sx;
  if (den == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return (n * sxy - sx * sy) / den;
}

ContinuityResult terminal_continuity_check(const CauchySolver& solver, const CauchyProblem& cp, const Vec& y,
                                           const std::vector<double>& dt_sequence) {
  ContinuityResult r;
  const double gy = cp.g.eval(cp.T, y);
  for (double dt : dt_sequence) {
    if (!(dt > 0.0) || dt > cp.T) throw ConfigError("terminal_continuity_check: dt must lie in (0, T]");
    if (!r.dts.empty() && !(dt < r.dts.back())) throw ConfigError("terminal_continuity_check: dt sequence must decrease");
    r.dts.push_back(dt);
    const double dev = std::abs(solver.solve(cp.T - dt, y) - gy);
    r.deviations.push_back(dev);
    r.max_deviation = std::max(r.max_deviation, dev);
  }
  r.slope = loglog_slope(r.dts, r.deviations);
  r.monotone = true;
  for (std::size_t i = 1; i < r.deviations.size(); ++i)
    if (r.deviations[i] > r.deviations[i - 1]) r.monotone = false;
  return r;
}

}  // namespace kolmo
