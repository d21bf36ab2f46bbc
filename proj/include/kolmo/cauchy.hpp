#pragma once

#include "kolmo/expr.hpp"
#include "kolmo/levi.hpp"

#include <vector>

namespace kolmo {

/// Backward Cauchy problem (A + Y)u = f on [0,T) x R^N, u(T, .) = g.
struct CauchyProblem {
  Expr g;                  // terminal datum, evaluated at (T, y)
  Expr f;                  // source f(s, y); constant 0 means no source term
  double T = 1.0;
  double growth_C = 0.0;   // |f| + |g| <= C e^{C |x|^2}
};

struct CauchyConfig {
  int gh_order = 12;       // per-dimension Gauss-Hermite order of the spatial integrals
  int time_nodes = 8;      // Gauss-Legendre nodes of the source time integral
  double eps_factor = 0.1; // spatial envelope covariance (mu + eps) C(T - t), eps = eps_factor * mu
};

class CauchySolver {
 public:
  CauchySolver(const DensityEvaluator& p, CauchyProblem cp, CauchyConfig cfg = {});

  /// u(t,x) = int p(t,x;T,y) g(y) dy - int_t^T int p(t,x;s,y) f(s,y) dy ds.
  double solve(double t, const Vec& x) const;

  /// Coefficients are constant with a_i = 0: p = e^{a (T-t)} Gamma is used in closed form.
  bool fast_path() const { return fast_; }
  /// Throws ConfigError("horizon too long for declared growth") unless 2 C lambda_max(C(h)) < 1.
  void check_growth(double h) const;

 private:
  // int p(t,x;s,y) w(y) dy for w = g (s = T) or w = f(s, .)
  double spatial(double t, const Vec& x, double s, const Expr& w) const;

  const DensityEvaluator& p_;
  CauchyProblem cp_;
  CauchyConfig cfg_;
  bool fast_ = false;
  bool has_f_ = false;
};

struct ContinuityResult {
  std::vector<double> dts;
  std::vector<double> deviations;  // |u(T - dt, y) - g(y)|
  double max_deviation = 0.0;
  double slope = 0.0;              // least-squares log-log slope of deviation vs dt
  bool monotone = false;           // deviations decrease along the sequence
};

/// |u(T - dt, y) - g(y)| along a decreasing dt sequence.
ContinuityResult terminal_continuity_check(const CauchySolver& solver, const CauchyProblem& cp, const Vec& y,
                                           const std::vector<double>& dt_sequence);

/// Least-squares slope of log(v) against log(h); non-positive entries are skipped.
double loglog_slope(const std::vector<double>& h, const std::vector<double>& v);

}  // namespace kolmo
