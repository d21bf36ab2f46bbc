#include "kolmo/levi.hpp"

#include "kolmo/parallel.hpp"
#include "kolmo/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace kolmo {

void QuadratureConfig::validate() const {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("quadrature: ") + what);
  };
  need(time_panels >= 2, "time_panels must be >= 2");
  need(inner_panels >= 2, "inner_panels must be >= 2");
  need(time_nodes >= 2 && time_nodes <= 64, "time_nodes must be in [2, 64]");
  need(inner_time_nodes >= 2 && inner_time_nodes <= 64, "inner_time_nodes must be in [2, 64]");
  need(outer_time_nodes >= 2 && outer_time_nodes <= 64, "outer_time_nodes must be in [2, 64]");
  need(gh_order >= 2 && gh_order <= 20, "gh_order must be in [2, 20]");
  need(inner_gh_order >= 2 && inner_gh_order <= 20, "inner_gh_order must be in [2, 20]");
  need(space_rule == "gauss-hermite", "space_rule must be \"gauss-hermite\" (sparse grids are not available)");
  need(series_tol > 0.0, "series_tol must be positive");
  need(max_terms >= 1, "max_terms must be >= 1");
  need(quad_tol > 0.0, "quad_tol must be positive");
  need(envelope_scale >= 1.0, "envelope_scale must be >= 1");
  need(eps_factor > 0.0, "eps_factor must be positive");
  need(min_dt > 0.0, "min_dt must be positive");
  need(max_levi_dim >= 1 && max_levi_dim <= kMaxDim, "max_levi_dim out of range");
}

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

struct Envelope {
  Vec c;
  Mat Linv;
  double logdetL = 0.0;

  Vec normalized(const Vec& eta) const { return Linv * (eta - c); }
  double density_from(const Vec& w) const {
    return std::exp(-0.5 * w.squaredNorm() - logdetL - 0.5 * static_cast<double>(w.size()) * kLog2Pi);
  }
  double density(const Vec& eta) const { return density_from(normalized(eta)); }
};

struct Chol {
  Mat L;
  double logdet = 0.0;  // log det L
};

Chol cholesky(const Mat& S) {
  Eigen::LLT<Mat> llt(S);
  if (llt.info() != Eigen::Success) throw NumericalError("covariance not positive definite");
  Chol ch;
  ch.L = llt.matrixL();
  for (int i = 0; i < S.rows(); ++i) {
    if (!(ch.L(i, i) > 0.0)) throw NumericalError("covariance not positive definite");
    ch.logdet += std::log(ch.L(i, i));
  }
  return ch;
}

struct TensorGH {
  std::vector<Vec> pts;
  std::vector<double> w;  // Lebesgue weights of the standardized rule: W_b (2 pi)^{N/2} e^{|w_b|^2/2}
};

TensorGH tensor_gh(int N, int order) {
  const Rule1D& r = gauss_hermite(order);
  TensorGH t;
  std::vector<int> idx(static_cast<std::size_t>(N), 0);
  do {
    Vec p(N);
    double w = 1.0;
    for (int k = 0; k < N; ++k) {
      const auto j = static_cast<std::size_t>(idx[static_cast<std::size_t>(k)]);
      p(k) = r.x[j];
      w *= r.w[j];
    }
    t.w.push_back(w * std::exp(0.5 * p.squaredNorm() + 0.5 * N * kLog2Pi));
    t.pts.push_back(p);
  } while (next_multi_index(idx, order));
  return t;
}

struct TimeStencil {
  int first = 0;
  int count = 1;
  double w[4] = {1.0, 0.0, 0.0, 0.0};
};

// Quadrature for int_rho^T int f(r, eta) d eta dr around a Gaussian bridge between a source
// kernel (mean E1 x, covariance A1) and the phi envelope at r.
struct InnerRule {
  double r = 0.0;
  double wt = 0.0;
  std::shared_ptr<const PanelTable> tab;
  Mat E1inv;
  Mat M_src;
  Vec m_c;
  Mat LS;
  double detLS = 1.0;
  Envelope env;
  double inv_phi_scale = 1.0;  // (T - r)^{alpha/2 - 1}
  TimeStencil stencil;
};

struct SourceCoeffs {
  Mat A;
  Vec a1;
  double a0 = 0.0;
  bool has_a1 = false;
};

struct KernelPoint {
  double value = 0.0;
  Vec grad;
  Mat hess;
};

}  // namespace

struct LeviSolution::Impl {
  CoefficientField c;
  Drift drift;
  QuadratureConfig q;
  double T = 0.0;
  Vec y;
  double t_min = 0.0;
  int N = 0, nt = 0, P = 0;
  EndpointMap map;
  std::vector<double> slice_u, slice_rho, slice_phi_scale;
  std::vector<Envelope> slice_env;
  TensorGH cloud, inner, outer;
  std::vector<double> gh_nodes, gh_bw;
  std::vector<std::vector<InnerRule>> slice_rules;
  Eigen::MatrixXd K;
  bool have_K = false;
  mutable std::mutex op_mutex;
  LeviDiagnostics diag;
  std::vector<std::vector<double>> terms;
  std::vector<double> sum;
  std::vector<double> cloud_weight;  // e^{-|w_a|^2/2}: node values are compared in envelope-weighted units

  double wnorm(const std::vector<double>& v) const {
    double m = 0.0;
    for (std::size_t n = 0; n < v.size(); ++n) m = std::max(m, std::abs(v[n]) * cloud_weight[n % static_cast<std::size_t>(P)]);
    return m;
  }

  Envelope phi_envelope(double r) const {
    const double h = T - r;
    const Mat Einv = drift.exp(-h);
    const PanelTable tab(drift, h, c.a2_constant() ? 1 : q.inner_panels);
    const Mat H = Einv * covariance_frozen_table(c, tab, T, y) * Einv.transpose();
    const Chol ch = cholesky(q.envelope_scale * H);
    Envelope e;
    e.c = Einv * y;
    e.Linv = ch.L.inverse();
    e.logdetL = ch.logdet;
    return e;
  }

  double phi_scale(double r) const { return std::pow(T - r, 1.0 - 0.5 * c.alpha()); }

  TimeStencil stencil(double r) const {
    TimeStencil s;
    const double u = map.inverse((r - t_min) / (T - t_min));
    if (u <= slice_u.front()) return s;
    if (u >= slice_u.back()) {
      s.first = nt - 1;
      return s;
    }
    int k = 0;
    while (k + 1 < nt && slice_u[static_cast<std::size_t>(k + 1)] <= u) ++k;
    const int m = std::min(4, nt);
    s.first = std::clamp(k - 1, 0, nt - m);
    s.count = m;
    for (int a = 0; a < m; ++a) {
      double l = 1.0;
      const double ua = slice_u[static_cast<std::size_t>(s.first + a)];
      for (int b = 0; b < m; ++b)
        if (b != a) l *= (u - slice_u[static_cast<std::size_t>(s.first + b)]) / (ua - slice_u[static_cast<std::size_t>(s.first + b)]);
      s.w[a] = l;
    }
    return s;
  }

  // Rules for a source at time rho with `n` time nodes.
  std::vector<InnerRule> make_rules(double rho, int n) const {
    const Rule1D& gl = gauss_legendre(n);
    std::vector<InnerRule> rules(static_cast<std::size_t>(n));
    const double span = T - rho;
    const double scale = q.envelope_scale * c.mu();
    for (int j = 0; j < n; ++j) {
      InnerRule& R = rules[static_cast<std::size_t>(j)];
      const double u = 0.5 * (gl.x[static_cast<std::size_t>(j)] + 1.0);
      R.r = rho + span * map(u);
      R.wt = span * map.deriv(u) * 0.5 * gl.w[static_cast<std::size_t>(j)];
      const double h1 = R.r - rho;
      R.tab = std::make_shared<const PanelTable>(drift, h1, c.a2_constant() ? 1 : q.inner_panels);
      R.E1inv = drift.exp(-h1);
      const Mat A1inv = (scale * covariance_const(1.0, h1, drift)).inverse();
      R.env = phi_envelope(R.r);
      const Mat Sinv = R.env.Linv.transpose() * R.env.Linv;
      Mat Lam = A1inv + Sinv;
      Lam = 0.5 * (Lam + Lam.transpose()).eval();
      Mat S = Lam.inverse();
      S = 0.5 * (S + S.transpose()).eval();
      const Chol ch = cholesky(S);
      R.LS = ch.L;
      R.detLS = std::exp(ch.logdet);
      R.M_src = S * A1inv * R.tab->exp_hB();
      R.m_c = S * (Sinv * R.env.c);
      R.inv_phi_scale = 1.0 / phi_scale(R.r);
      R.stencil = stencil(R.r);
    }
    return rules;
  }

  SourceCoeffs source_coeffs(double t, const Vec& x) const {
    SourceCoeffs s;
    s.A = c.a2(t, x);
    s.has_a1 = !c.a1_zero();
    if (s.has_a1) s.a1 = c.a1(t, x);
    s.a0 = c.a0(t, x);
    return s;
  }

  // Kernel P(t, x; r, eta) frozen at (r, eta), with x-derivatives up to second order in the first d coordinates.
  KernelPoint kernel_at(const InnerRule& R, const Vec& x, const Vec& eta, bool derivs) const {
    const Mat C = covariance_frozen_table(c, *R.tab, R.r, eta);
    const FrozenKernel k(C, R.tab->exp_hB());
    const auto pt = k.eval(x, eta);
    KernelPoint kp;
    kp.value = pt.value;
    if (derivs) {
      const int d = c.d();
      kp.grad = pt.v.head(d) * pt.value;
      kp.hess.resize(d, d);
      for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) kp.hess(i, j) = kp.hess(j, i) = (pt.v(i) * pt.v(j) - k.K()(i, j)) * pt.value;
    }
    return kp;
  }

  // phi_1(t, x; r, eta) for a source with precomputed coefficients.
  double phi1_pair(const InnerRule& R, double t, const Vec& x, const SourceCoeffs& sc, const Vec& eta) const {
    const KernelPoint kp = kernel_at(R, x, eta, true);
    const Vec z = R.E1inv * eta;
    const Mat D = sc.A - c.a2(t, z);
    double f = 0.5 * D.cwiseProduct(kp.hess).sum();
    if (sc.has_a1) f += sc.a1.dot(kp.grad);
    f += sc.a0 * kp.value;
    return f;
  }

  void spatial_basis(const Vec& w, std::vector<double>& basis) const {
    const int n = static_cast<int>(gh_nodes.size());
    basis.resize(static_cast<std::size_t>(N * n));
    for (int k = 0; k < N; ++k) {
      const double wk = std::clamp(w(k), gh_nodes.front(), gh_nodes.back());
      barycentric_basis(gh_nodes, gh_bw, wk, std::span<double>(basis.data() + k * n, static_cast<std::size_t>(n)));
    }
  }

  // Visits (node index, weight) of the interpolant at (r, eta); weights already include the envelope factor.
  template <class F>
  void interp_visit(const InnerRule& R, const Vec& eta, F&& f) const {
    const Vec w = R.env.normalized(eta);
    const double g = R.env.density_from(w) * R.inv_phi_scale;
    thread_local std::vector<double> basis;
    spatial_basis(w, basis);
    const int n = static_cast<int>(gh_nodes.size());
    for (int m = 0; m < P; ++m) {
      double b = g;
      int rem = m;
      for (int k = 0; k < N; ++k) {
        b *= basis[static_cast<std::size_t>(k * n + rem % n)];
        rem /= n;
      }
      if (b == 0.0) continue;
      for (int s = 0; s < R.stencil.count; ++s) f((R.stencil.first + s) * P + m, b * R.stencil.w[s]);
    }
  }

  double interp_value(const InnerRule& R, const Vec& eta, const std::vector<double>& qv) const {
    double v = 0.0;
    interp_visit(R, eta, [&](int idx, double b) { v += b * qv[static_cast<std::size_t>(idx)]; });
    return v;
  }

  Vec node_point(int n) const {
    const int i = n / P, a = n % P;
    const Envelope& e = slice_env[static_cast<std::size_t>(i)];
    return e.c + e.Linv.inverse() * cloud.pts[static_cast<std::size_t>(a)];
  }

  double phi1_direct(double t, const Vec& x) const { return parametrix_mismatch(c, drift, t, x, T, y, q.time_panels, q.min_dt); }

  // sum over the bridge rule of phi_1(t,x;r,eta) * g(r, eta).
  template <class G>
  double volterra_integral(const std::vector<InnerRule>& rules, const TensorGH& gh, double t, const Vec& x,
                           G&& g) const {
    const SourceCoeffs sc = source_coeffs(t, x);
    std::vector<double> parts;
    parts.reserve(rules.size() * gh.pts.size());
    for (const InnerRule& R : rules) {
      const Vec mean = R.M_src * x + R.m_c;
      for (std::size_t b = 0; b < gh.pts.size(); ++b) {
        const Vec eta = mean + R.LS * gh.pts[b];
        const double w = R.wt * R.detLS * gh.w[b];
        const double f1 = phi1_pair(R, t, x, sc, eta);
        parts.push_back(w * f1 * g(R, eta));
      }
    }
    return pairwise_sum(parts);
  }

  void build_operator() {
    const int M = nt * P;
    K = Eigen::MatrixXd::Zero(M, M);
    slice_rules.resize(static_cast<std::size_t>(nt));
    parallel_for(static_cast<std::size_t>(nt), [&](std::size_t i) {
      slice_rules[i] = make_rules(slice_rho[i], q.inner_time_nodes);
    });
    parallel_for(static_cast<std::size_t>(M), [&](std::size_t n) {
      const int i = static_cast<int>(n) / P;
      const double rho = slice_rho[static_cast<std::size_t>(i)];
      const Vec x = node_point(static_cast<int>(n));
      const double row_scale = slice_phi_scale[static_cast<std::size_t>(i)] / slice_env[static_cast<std::size_t>(i)].density(x);
      const SourceCoeffs sc = source_coeffs(rho, x);
      std::vector<double> row(static_cast<std::size_t>(M), 0.0);
      for (const InnerRule& R : slice_rules[static_cast<std::size_t>(i)]) {
        const Vec mean = R.M_src * x + R.m_c;
        for (std::size_t b = 0; b < inner.pts.size(); ++b) {
          const Vec eta = mean + R.LS * inner.pts[b];
          const double w = R.wt * R.detLS * inner.w[b];
          const double f = w * phi1_pair(R, rho, x, sc, eta) * row_scale;
          interp_visit(R, eta, [&](int idx, double bw) { row[static_cast<std::size_t>(idx)] += f * bw; });
        }
      }
      for (int m = 0; m < M; ++m) K(static_cast<Eigen::Index>(n), m) = row[static_cast<std::size_t>(m)];
    });
    have_K = true;
  }

  std::vector<double> apply(const std::vector<double>& v) const {
    const int M = nt * P;
    std::vector<double> out(static_cast<std::size_t>(M), 0.0);
    parallel_for(static_cast<std::size_t>(M), [&](std::size_t n) {
      double s = 0.0;
      for (int m = 0; m < M; ++m) s += K(static_cast<Eigen::Index>(n), m) * v[static_cast<std::size_t>(m)];
      out[n] = s;
    });
    return out;
  }

  // Majorant series sum_{n>k} kappa^n G(a/2)^n h^{a n/2} / G(a n/2), relative to its first term.
  double analytic_tail(int k, double h) const {
    const double a = c.alpha(), kap = diag.kappa;
    if (kap <= 0.0) return 0.0;
    auto log_term = [&](int n) {
      return n * std::log(kap) + n * std::lgamma(0.5 * a) + 0.5 * a * n * std::log(h) - std::lgamma(0.5 * a * n);
    };
    const double first = log_term(1);
    double s = 0.0;
    for (int n = k + 1; n < k + 400; ++n) {
      const double t = std::exp(log_term(n) - first);
      s += t;
      if (t < 1e-18 * std::max(s, 1e-300)) break;
    }
    return s;
  }

  void probe() {
    const int i_list[3] = {nt / 4, nt / 2, (3 * nt) / 4};
    const int centre = P / 2;
    double s1 = 0.0;
    s1 = wnorm(terms[0]);
    double worst = 0.0;
    for (int i : i_list) {
      const int n = i * P + centre;
      const double rho = slice_rho[static_cast<std::size_t>(i)];
      const Vec x = node_point(n);
      const double row_scale = slice_phi_scale[static_cast<std::size_t>(i)] / slice_env[static_cast<std::size_t>(i)].density(x);
      const double from_K = terms.size() > 1 ? terms[1][static_cast<std::size_t>(n)] : 0.0;
      const double ref = phi2_direct(rho, x, 2 * q.inner_time_nodes, q.inner_gh_order + 2) * row_scale;
      worst = std::max(worst, std::abs(from_K - ref));
    }
    diag.probe_error = s1 > 0.0 ? worst / s1 : 0.0;
    if (diag.probe_error > 10.0 * q.quad_tol) {
      std::ostringstream os;
      os << "Volterra quadrature disagreement: phi_2 differs from a refined rule by " << diag.probe_error
         << " (relative to max |phi_1|), above 10 x quad_tol = " << 10.0 * q.quad_tol << "; target T=" << T;
      throw NumericalError(os.str());
    }
  }

  double phi2_direct(double t, const Vec& x, int n_time, int n_gh) const {
    const auto rules = make_rules(t, n_time);
    const TensorGH gh = tensor_gh(N, n_gh);
    return volterra_integral(rules, gh, t, x, [&](const InnerRule& R, const Vec& eta) { return phi1_direct(R.r, eta); });
  }

  FieldEval big_phi(double t, const Vec& x, int want) const {
    FieldEval out;
    const int d = c.d();
    const bool derivs = want & (kWantGrad | kWantHess);
    out.grad = Vec::Zero(d);
    out.hess = Mat::Zero(d, d);
    if (diag.trivial) return out;
    if (t < t_min - 1e-14) throw ConfigError("Phi: evaluation time below the solution's t_min");
    if (!(T - t >= q.min_dt)) throw ConfigError("Phi: T - t below the minimum time step");
    const auto rules = make_rules(t, q.outer_time_nodes);
    const std::size_t nb = outer.pts.size();
    const std::size_t total = rules.size() * nb;
    const int nd = 1 + d + d * d;
    std::vector<double> parts(total * static_cast<std::size_t>(nd), 0.0);
    for (std::size_t j = 0; j < rules.size(); ++j) {
      const InnerRule& R = rules[j];
      const Vec mean = R.M_src * x + R.m_c;
      for (std::size_t b = 0; b < nb; ++b) {
        const Vec eta = mean + R.LS * outer.pts[b];
        const double w = R.wt * R.detLS * outer.w[b] * interp_value(R, eta, sum);
        const KernelPoint kp = kernel_at(R, x, eta, derivs);
        const std::size_t base = (j * nb + b);
        parts[base] = w * kp.value;
        if (derivs) {
          for (int i = 0; i < d; ++i) parts[static_cast<std::size_t>(1 + i) * total + base] = w * kp.grad(i);
          for (int i = 0; i < d; ++i)
            for (int k = 0; k < d; ++k)
              parts[static_cast<std::size_t>(1 + d + i * d + k) * total + base] = w * kp.hess(i, k);
        }
      }
    }
    auto slot = [&](int s) { return pairwise_sum(std::span<const double>(parts.data() + static_cast<std::size_t>(s) * total, total)); };
    out.value = slot(0);
    if (derivs) {
      for (int i = 0; i < d; ++i) out.grad(i) = slot(1 + i);
      for (int i = 0; i < d; ++i)
        for (int k = 0; k < d; ++k) out.hess(i, k) = slot(1 + d + i * d + k);
      out.hess = (0.5 * (out.hess + out.hess.transpose())).eval();
    }
    return out;
  }
};

LeviSolution::LeviSolution(const CoefficientField& c, const Drift& drift, const QuadratureConfig& q, double T,
                           const Vec& y, double t_min)
    : impl_(std::make_unique<Impl>()) {
  Impl& I = *impl_;
  I.c = c;
  I.drift = drift;
  I.q = q;
  I.T = T;
  I.y = y;
  I.t_min = t_min;
  I.q.validate();
  if (!(T - t_min > I.q.min_dt)) throw ConfigError("Levi solution: need t_min < T");
  if (y.size() != drift.N() || c.N() != drift.N()) throw ConfigError("Levi solution: dimension mismatch");
  I.N = drift.N();
  const int N = I.N;
  const bool trivial_coeffs = c.a2_time_only() && c.lower_order_zero();
  if (N > I.q.max_levi_dim) {
    if (!trivial_coeffs) {
      std::ostringstream os;
      os << "Levi iteration supports N <= " << I.q.max_levi_dim << " (got N=" << N << ")";
      throw ConfigError(os.str());
    }
    I.diag.trivial = true;
    I.diag.terms = 1;
    I.terms.emplace_back();
    return;
  }

  I.map.p = endpoint_exponent(c.alpha());
  I.nt = I.q.time_nodes;
  I.cloud = tensor_gh(N, I.q.gh_order);
  I.inner = tensor_gh(N, I.q.inner_gh_order);
  I.outer = tensor_gh(N, I.q.gh_order);
  I.P = static_cast<int>(I.cloud.pts.size());
  for (const Vec& w : I.cloud.pts) I.cloud_weight.push_back(std::exp(-0.5 * w.squaredNorm()));
  I.gh_nodes = gauss_hermite(I.q.gh_order).x;
  I.gh_bw = barycentric_weights(I.gh_nodes);

  const Rule1D& gl = gauss_legendre(I.nt);
  const double span = T - t_min;
  for (int i = 0; i < I.nt; ++i) {
    const double u = 0.5 * (gl.x[static_cast<std::size_t>(i)] + 1.0);
    I.slice_u.push_back(u);
    I.slice_rho.push_back(t_min + span * I.map(u));
  }
  for (int i = 0; i < I.nt; ++i) {
    I.slice_env.push_back(I.phi_envelope(I.slice_rho[static_cast<std::size_t>(i)]));
    I.slice_phi_scale.push_back(I.phi_scale(I.slice_rho[static_cast<std::size_t>(i)]));
  }

  const int M = I.nt * I.P;
  I.diag.nodes = M;
  std::vector<double> q1(static_cast<std::size_t>(M), 0.0), kappa_ratio(static_cast<std::size_t>(M), 0.0);
  const double mu_eps = c.mu() * (1.0 + I.q.eps_factor);
  parallel_for(static_cast<std::size_t>(M), [&](std::size_t n) {
    const int i = static_cast<int>(n) / I.P;
    const Vec x = I.node_point(static_cast<int>(n));
    const double rho = I.slice_rho[static_cast<std::size_t>(i)];
    const double f = I.phi1_direct(rho, x);
    q1[n] = f * I.slice_phi_scale[static_cast<std::size_t>(i)] / I.slice_env[static_cast<std::size_t>(i)].density(x);
    const double h = T - rho;
    const double env = gauss_density(mu_eps * covariance_const(1.0, h, I.drift), y - I.drift.exp(h) * x);
    kappa_ratio[n] = env > 0.0 ? std::abs(f) * std::pow(h, 1.0 - 0.5 * c.alpha()) / env : 0.0;
  });
  I.terms.push_back(q1);
  I.sum = q1;
  double norm_prev = I.wnorm(q1);
  for (double v : kappa_ratio) I.diag.kappa = std::max(I.diag.kappa, v);
  I.diag.term_norms.push_back(norm_prev);
  I.diag.terms = 1;
  I.diag.scale = norm_prev;
  if (norm_prev == 0.0) {
    I.diag.trivial = true;
    return;
  }

  I.build_operator();
  bool converged = false;
  for (int k = 2; k <= I.q.max_terms; ++k) {
    std::vector<double> next = I.apply(I.terms.back());
    const double norm = I.wnorm(next);
    for (std::size_t n = 0; n < next.size(); ++n) I.sum[n] += next[n];
    I.terms.push_back(std::move(next));
    I.diag.term_norms.push_back(norm);
    I.diag.terms = k;
    const double scale = I.wnorm(I.sum);
    I.diag.scale = scale;
    const double ratio = norm_prev > 0.0 ? norm / norm_prev : 0.0;
    I.diag.last_ratio = ratio;
    norm_prev = norm;
    if (norm == 0.0) {
      I.diag.tail = 0.0;
      converged = true;
      break;
    }
    if (ratio < 1.0) {
      I.diag.tail = norm * ratio / (1.0 - ratio) / scale;
      if (I.diag.tail < I.q.series_tol) {
        converged = true;
        break;
      }
    } else {
      I.diag.tail = std::numeric_limits<double>::infinity();
    }
  }
  I.diag.analytic_tail = I.analytic_tail(I.diag.terms, T - t_min);
  if (!converged && I.q.max_terms > 1) {
    std::ostringstream os;
    os << "Levi series did not reach series_tol=" << I.q.series_tol << " within max_terms=" << I.q.max_terms
       << " (tail estimate " << I.diag.tail << ", last ratio " << I.diag.last_ratio << ")";
    throw SeriesNotConverged(os.str(), I.diag.scale, I.diag.terms);
  }
  I.probe();
  if (!I.q.keep_operator) {
    I.K.resize(0, 0);
    I.slice_rules.clear();
    I.slice_rules.shrink_to_fit();
    I.have_K = false;
  }
}

LeviSolution::~LeviSolution() = default;

double LeviSolution::T() const { return impl_->T; }
const Vec& LeviSolution::y() const { return impl_->y; }
double LeviSolution::t_min() const { return impl_->t_min; }
const LeviDiagnostics& LeviSolution::diagnostics() const { return impl_->diag; }
const QuadratureConfig& LeviSolution::config() const { return impl_->q; }
int LeviSolution::num_nodes() const { return impl_->nt * impl_->P; }
double LeviSolution::node_time(int n) const { return impl_->slice_rho.at(static_cast<std::size_t>(n / impl_->P)); }
Vec LeviSolution::node_point(int n) const { return impl_->node_point(n); }
const std::vector<double>& LeviSolution::term(int k) const { return impl_->terms.at(static_cast<std::size_t>(k - 1)); }
const std::vector<double>& LeviSolution::phi_nodes() const { return impl_->sum; }

double LeviSolution::unscale(int n, double qv) const {
  const Impl& I = *impl_;
  const int i = n / I.P;
  return qv * I.slice_env[static_cast<std::size_t>(i)].density(I.node_point(n)) / I.slice_phi_scale[static_cast<std::size_t>(i)];
}

std::vector<double> LeviSolution::phi_next(const std::vector<double>& prev) const {
  const Impl& I = *impl_;
  if (I.diag.trivial) return std::vector<double>(prev.size(), 0.0);
  if (static_cast<int>(prev.size()) != num_nodes()) throw ConfigError("phi_next: node vector has the wrong size");
  std::lock_guard<std::mutex> lock(I.op_mutex);
  if (!I.have_K) const_cast<Impl&>(I).build_operator();  // released after the series; rebuilt on demand
  return I.apply(prev);
}

double LeviSolution::phi_interp(double r, const Vec& eta) const {
  const Impl& I = *impl_;
  if (I.diag.trivial) return 0.0;
  InnerRule R;
  R.env = I.phi_envelope(r);
  R.inv_phi_scale = 1.0 / I.phi_scale(r);
  R.stencil = I.stencil(r);
  return I.interp_value(R, eta, I.sum);
}

double LeviSolution::phi1(double t, const Vec& x) const { return impl_->phi1_direct(t, x); }

double LeviSolution::phi(double t, const Vec& x) const {
  const Impl& I = *impl_;
  if (I.diag.trivial) return 0.0;
  const auto rules = I.make_rules(t, I.q.inner_time_nodes);
  const double corr =
      I.volterra_integral(rules, I.inner, t, x, [&](const InnerRule& R, const Vec& eta) { return I.interp_value(R, eta, I.sum); });
  return I.phi1_direct(t, x) + corr;
}

double LeviSolution::phi2_direct(double t, const Vec& x, int time_nodes, int gh_order) const {
  return impl_->phi2_direct(t, x, time_nodes, gh_order);
}

FieldEval LeviSolution::big_phi(double t, const Vec& x, int want) const { return impl_->big_phi(t, x, want); }

FieldEval LeviSolution::p(double t, const Vec& x, int want) const {
  const Impl& I = *impl_;
  const ParametrixEval pe = parametrix_eval(I.c, I.drift, t, x, I.T, I.y, want, I.q.time_panels, I.q.min_dt);
  FieldEval out = I.big_phi(t, x, want);
  out.value += pe.value;
  if (want & (kWantGrad | kWantHess)) out.grad += pe.grad;
  if (want & kWantHess) out.hess += pe.hess;
  const double h = I.T - t;
  const double ref = gauss_density(I.c.mu() * covariance_const(1.0, h, I.drift), I.y - I.drift.exp(h) * x);
  out.negative_flag = out.value < -I.q.series_tol * ref;
  return out;
}

LeviEvaluator::LeviEvaluator(CoefficientField c, Drift drift, QuadratureConfig q)
    : c_(std::move(c)), drift_(std::move(drift)), q_(std::move(q)) {
  q_.validate();
}

std::shared_ptr<const LeviSolution> LeviEvaluator::solution(double T, const Vec& y) const {
  std::vector<double> key{T};
  for (int i = 0; i < y.size(); ++i) key.push_back(y(i));
  {
    std::lock_guard<std::mutex> lock(m_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
  }
  auto sol = std::make_shared<const LeviSolution>(c_, drift_, q_, T, y, 0.0);
  std::lock_guard<std::mutex> lock(m_);
  if (cache_.size() >= 4096) cache_.clear();
  auto [it, inserted] = cache_.emplace(key, sol);
  return it->second;
}

FieldEval LeviEvaluator::p(double t, const Vec& x, double T, const Vec& y, int want) const {
  if (t < 0.0) throw ConfigError("evaluation time must be >= 0");
  if (collapses()) {
    const ParametrixEval pe = parametrix_eval(c_, drift_, t, x, T, y, want, q_.time_panels, q_.min_dt);
    FieldEval out;
    out.value = pe.value;
    out.grad = (want & (kWantGrad | kWantHess)) ? pe.grad : Vec::Zero(c_.d());
    out.hess = (want & kWantHess) ? pe.hess : Mat::Zero(c_.d(), c_.d());
    return out;
  }
  return solution(T, y)->p(t, x, want);
}

bool LeviEvaluator::collapses() const { return c_.a2_time_only() && c_.lower_order_zero(); }

double LeviEvaluator::tolerance() const {
  if (!collapses()) return q_.quad_tol;
  if (c_.a2_constant()) return 1e-12;
  // Midpoint panels: second order for smooth time dependence.
  return 1e-6;
}

SeriesValue phi_series(const CoefficientField& c, const Drift& drift, double t, const Vec& x, double T, const Vec& y,
                       const QuadratureConfig& q) {
  const LeviSolution sol(c, drift, q, T, y, t);
  SeriesValue out;
  out.value = sol.phi(t, x);
  out.k_used = sol.diagnostics().terms;
  out.tail_bound = sol.diagnostics().tail;
  return out;
}

FieldEval big_phi(const CoefficientField& c, const Drift& drift, double t, const Vec& x, double T, const Vec& y,
                  const QuadratureConfig& q, int want) {
  const LeviSolution sol(c, drift, q, T, y, t);
  return sol.big_phi(t, x, want);
}

FieldEval fundamental_solution(const CoefficientField& c, const Drift& drift, double t, const Vec& x, double T,
                               const Vec& y, const QuadratureConfig& q, int want) {
  const LeviSolution sol(c, drift, q, T, y, t);
  return sol.p(t, x, want);
}

}  // namespace kolmo
