#include "kolmo/coeffs.hpp"

#include "kolmo/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <sstream>

namespace kolmo {

CoefficientField::CoefficientField(int N, int d, std::vector<Expr> a2_row_major, std::vector<Expr> a1, Expr a0,
                                   double mu, double alpha, double T_bar)
    : N_(N), d_(d), a2_(std::move(a2_row_major)), a1_(std::move(a1)), a0_(std::move(a0)), mu_(mu), alpha_(alpha),
      T_bar_(T_bar) {
  static std::atomic<std::uint64_t> next_id{1};
  id_ = next_id.fetch_add(1);
  if (N < 1 || N > kMaxDim) throw ConfigError("N out of range");
  if (d < 1 || d > N) throw ConfigError("d out of range");
  if (static_cast<int>(a2_.size()) != d * d) throw ConfigError("a2 must have d x d entries");
  if (a1_.empty()) a1_.assign(static_cast<std::size_t>(d), Expr());
  if (static_cast<int>(a1_.size()) != d) throw ConfigError("a1 must have d entries");
  if (!(mu >= 1.0) || !std::isfinite(mu)) throw ConfigError("mu must be finite and >= 1");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in (0, 1]");
  if (!(T_bar > 0.0) || !std::isfinite(T_bar)) throw ConfigError("T_bar must be positive");
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      if (!(a2_expr(i, j).ast() == a2_expr(j, i).ast())) {
        // Textually different: fall back to a numerical check at a few points.
        Vec x = Vec::Zero(N);
        for (int k = 0; k < 8; ++k) {
          for (int m = 0; m < N; ++m) x(m) = std::sin(1.7 * k + 0.9 * m) * (k + 1);
          const double t = T_bar * (k + 0.5) / 8.0;
          const double u = a2_expr(i, j).eval(t, x), v = a2_expr(j, i).eval(t, x);
          if (std::abs(u - v) > 1e-12 * std::max({1.0, std::abs(u), std::abs(v)}))
            throw ConfigError("a2 is not symmetric");
        }
      }
}

CoefficientField CoefficientField::constant_diagonal(int N, int d, double delta, double mu, double alpha,
                                                     double T_bar) {
  std::vector<Expr> a2;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a2.push_back(Expr::constant(i == j ? delta : 0.0));
  return CoefficientField(N, d, std::move(a2), {}, Expr(), mu, alpha, T_bar);
}

double CoefficientField::a2_entry(int i, int j, double t, const Vec& x) const { return a2_expr(i, j).eval(t, x); }

Mat CoefficientField::a2(double t, const Vec& x) const {
  Mat A(d_, d_);
  for (int i = 0; i < d_; ++i) {
    A(i, i) = a2_expr(i, i).eval(t, x);
    for (int j = i + 1; j < d_; ++j) A(i, j) = A(j, i) = a2_expr(i, j).eval(t, x);
  }
  return A;
}

Vec CoefficientField::a1(double t, const Vec& x) const {
  Vec v(d_);
  for (int i = 0; i < d_; ++i) v(i) = a1_[static_cast<std::size_t>(i)].eval(t, x);
  return v;
}

double CoefficientField::a0(double t, const Vec& x) const { return a0_.eval(t, x); }

bool CoefficientField::a2_constant() const {
  return std::all_of(a2_.begin(), a2_.end(), [](const Expr& e) { return e.is_constant(); });
}

bool CoefficientField::a2_time_only() const {
  return std::none_of(a2_.begin(), a2_.end(), [](const Expr& e) { return e.depends_on_x(); });
}

bool CoefficientField::a2_may_jump() const {
  return std::any_of(a2_.begin(), a2_.end(), [](const Expr& e) { return e.has_step(); });
}

bool CoefficientField::a1_zero() const {
  return std::all_of(a1_.begin(), a1_.end(), [](const Expr& e) { return e.is_constant() && e.constant_value() == 0.0; });
}

bool CoefficientField::lower_order_zero() const {
  return a1_zero() && a0_.is_constant() && a0_.constant_value() == 0.0;
}

namespace {


}  // namespace

EllipticityResult validate_ellipticity(const CoefficientField& c, int samples, std::uint64_t seed, double R) {
  if (samples < 1) throw ConfigError("samples must be >= 1");
  EllipticityResult res;
  res.ok = true;
  const int N = c.N();
  // Seed selects a Halton offset; the sequence itself is deterministic.
  const std::uint64_t offset = 1 + (seed % 100000);
  Vec x(N);
  for (int k = 0; k < samples; ++k) {
    const std::uint64_t idx = offset + static_cast<std::uint64_t>(k);
    const double t = c.T_bar() * halton(idx, 0);
    for (int i = 0; i < N; ++i) x(i) = R * (2.0 * halton(idx, i + 1) - 1.0);
    Mat A;
    try {
      A = Mat(c.d(), c.d());
      for (int i = 0; i < c.d(); ++i)
        for (int j = 0; j < c.d(); ++j) A(i, j) = c.a2_entry(i, j, t, x);
    } catch (const EvalError&) {
      res.ok = false;
      res.observed_mu = std::numeric_limits<double>::infinity();
      continue;
    }
    const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
    if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      std::ostringstream os;
      os << "non-symmetric a2 at sample t=" << t;
      throw ConfigError(os.str());
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(A, Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues().minCoeff(), lmax = es.eigenvalues().maxCoeff();
    const double obs = lmin > 0.0 ? std::max(lmax, 1.0 / lmin) : std::numeric_limits<double>::infinity();
    res.observed_mu = std::max(res.observed_mu, obs);
    const double slack = 1e-12;
    if (lmin < 1.0 / c.mu() - slack || lmax > c.mu() + slack) res.ok = false;
  }
  res.samples = samples;
  return res;
}

HolderModulus estimate_holder_modulus(const CoefficientField& c, const BlockStructure& s, int samples,
                                      std::uint64_t seed, double R) {
  const int N = c.N(), d = c.d();
  HolderModulus hm;
  std::vector<const Expr*> exprs;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      hm.names.push_back("a" + std::to_string(i + 1) + std::to_string(j + 1));
      exprs.push_back(&c.a2_expr(i, j));
    }
  for (int i = 0; i < d; ++i) {
    hm.names.push_back("a1_" + std::to_string(i + 1));
    exprs.push_back(&c.a1_expr(i));
  }
  hm.names.push_back("a0");
  exprs.push_back(&c.a0_expr());
  hm.values.assign(exprs.size(), 0.0);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vec x(N), y(N);
  for (int k = 0; k < samples; ++k) {
    const double t = c.T_bar() * unif(rng);
    const int kind = k % 3;
    for (int i = 0; i < N; ++i) x(i) = R * (2.0 * unif(rng) - 1.0);
    y = x;
    if (kind == 0) {
      for (int i = 0; i < N; ++i) y(i) = R * (2.0 * unif(rng) - 1.0);
    } else {
      // Axis pair; kind 2 pushes the base coordinate towards 0 on a log scale.
      const int axis = static_cast<int>(unif(rng) * N) % N;
      const double mag = std::pow(10.0, -8.0 * unif(rng));
      const double sign = unif(rng) < 0.5 ? -1.0 : 1.0;
      if (kind == 2) x(axis) = sign * mag * std::pow(10.0, -4.0 * unif(rng));
      y(axis) = x(axis) + (unif(rng) < 0.5 ? -1.0 : 1.0) * R * mag;
    }
    const Vec diff = x - y;
    const double dist = anisotropic_norm(diff, s);
    if (!(dist > 0.0)) continue;
    const double denom = std::pow(dist, c.alpha());
    for (std::size_t e = 0; e < exprs.size(); ++e) {
      if (!exprs[e]->depends_on_x()) continue;
      double q = 0.0;
      try {
        q = std::abs(exprs[e]->eval(t, x) - exprs[e]->eval(t, y)) / denom;
      } catch (const EvalError&) {
        continue;
      }
      hm.values[e] = std::max(hm.values[e], q);
    }
    ++hm.pairs;
  }
  return hm;
}

Mat frozen_coefficients(const CoefficientField& c, const Mat& exp_tau_minus_s_B, const Vec& v, double tau) {
  const Vec z = exp_tau_minus_s_B * v;
  return c.a2(tau, z);
}

}  // namespace kolmo
