#pragma once

#include "kolmo/coeffs.hpp"
#include "kolmo/structure.hpp"
#include "kolmo/types.hpp"

#include <array>
#include <memory>
#include <span>
#include <utility>
#include <vector>

namespace kolmo {

inline constexpr double kDefaultMinDt = 1e-8;

/// e^{tB}: finite series for nilpotent B, otherwise scaling-and-squaring (Eigen MatrixFunctions).
Mat expm(const Mat& B, double t);

/// Drift matrix B with its block structure and cached nilpotency data.
class Drift {
 public:
  Drift() = default;
  /// Requires the Kalman condition and canonical block form (ConfigError otherwise).
  Drift(const Mat& B, int d, double rank_tol = kDefaultRankTol);

  int N() const { return static_cast<int>(B_.rows()); }
  int d() const { return s_.d; }
  const Mat& B() const { return B_; }
  const BlockStructure& structure() const { return s_; }
  bool nilpotent() const { return nil_index_ > 0; }

  Mat exp(double t) const;
  /// B with the diagonal and upper (starred) blocks set to zero.
  Drift reduced() const;

 private:
  Mat B_;
  BlockStructure s_;
  int nil_index_ = 0;  // smallest k with B^k = 0, or 0 when not nilpotent
  std::vector<Mat> powers_over_factorial_;
  void init_powers();
};

/// delta * C(dt), C(t) = int_0^t e^{sB} (I_d 0; 0 0) e^{sB*} ds.
Mat covariance_const(double delta, double dt, const Drift& drift);

/// Gaussian density g(C, z). Throws NumericalError("covariance not positive definite") if C is not SPD.
double gauss_density(const Mat& C, const Vec& z);

/// Gamma^delta(t, x; T, y) = g(delta C(T-t), y - e^{(T-t)B} x).
double gamma_delta(double delta, double t, const Vec& x, double T, const Vec& y, const Drift& drift,
                   double min_dt = kDefaultMinDt);

/// Panel layout and exact panel moments for covariances over an interval of length h.
///
/// In the reversed variable sigma = T - tau, panel k covers [lo[k], hi[k]] and
/// moment(k, p) = int_panel e^{sigma B} E_p e^{sigma B*} d sigma for the symmetric
/// elementary matrix E_p of pair p = (i, j), i <= j < d.
class PanelTable {
 public:
  PanelTable(const Drift& drift, double h, int panels);

  double h() const { return h_; }
  int panels() const { return static_cast<int>(lo_.size()); }
  int pairs() const { return static_cast<int>(pair_.size()); }
  std::pair<int, int> pair(int p) const { return pair_[static_cast<std::size_t>(p)]; }
  double lo(int k) const { return lo_[static_cast<std::size_t>(k)]; }
  double hi(int k) const { return hi_[static_cast<std::size_t>(k)]; }
  double mid(int k) const { return 0.5 * (lo(k) + hi(k)); }
  /// e^{-mid(k) B}
  const Mat& back_flow(int k) const { return back_[static_cast<std::size_t>(k)]; }
  const Mat& moment(int k, int p) const { return mom_[static_cast<std::size_t>(k * pairs() + p)]; }
  /// e^{hB}
  const Mat& exp_hB() const { return exp_hB_; }
  const Drift& drift() const { return drift_; }

  /// Exact moment over an arbitrary sub-interval [a, b] of [0, h].
  Mat moment_on(double a, double b, int p) const;

 private:
  Drift drift_;
  double h_;
  std::vector<double> lo_, hi_;
  std::vector<Mat> back_;
  std::vector<Mat> mom_;
  std::vector<std::pair<int, int>> pair_;
  Mat exp_hB_;
  int gl_nodes_;
};

/// C^{(s,v)}(t,T) on a panel table of length h = T - t. `v_T` is e^{(T-s)B} v, i.e. the frozen curve at time T.
/// Coefficients are evaluated at each panel midpoint; jumps along the curve are located by bisection
/// and the containing panel is split there.
Mat covariance_frozen_table(const CoefficientField& c, const PanelTable& table, double T, const Vec& v_T);

struct FrozenCovariance {
  Mat C;
  double error_estimate = 0.0;  // |C(n panels) - C(n/2 panels)|_max / 3
};

/// Public entry point: C^{(s,v)}(t,T) with `panels` panels and a Richardson-style error estimate.
FrozenCovariance covariance_frozen(const CoefficientField& c, const Drift& drift, double s_freeze, const Vec& v,
                                   double t, double T, int panels = 256);

/// Gaussian Gamma(x) = g(C, y - E x) with E = e^{hB}, plus analytic x-derivatives.
class FrozenKernel {
 public:
  FrozenKernel() = default;
  /// `C` covariance, `E` = e^{(T-t)B}.
  FrozenKernel(const Mat& C, const Mat& E);

  int N() const { return static_cast<int>(C_.rows()); }
  const Mat& C() const { return C_; }
  const Mat& E() const { return E_; }
  /// H = E^{-1} C E^{-*}
  Mat H() const;
  double logdet() const { return logdet_; }

  struct Point {
    double value = 0.0;
    Vec v;  // E^* C^{-1} z: d/dx log Gamma
  };
  Point eval(const Vec& x, const Vec& y) const;
  /// K = E^* C^{-1} E: minus the Hessian of log Gamma.
  const Mat& K() const { return K_; }

  /// d^nu / dx^nu Gamma at (x, y) for coordinate list `idx` (repetitions allowed, length <= 4).
  double deriv(const Point& p, std::span<const int> idx) const;

 private:
  Mat C_, E_, K_, Et_Linv_t_;
  Eigen::LLT<Mat> llt_;
  double logdet_ = 0.0;
};

/// d^nu Gamma at (x, y) for a multi-index nu with [nu]_B <= 4 (rejects larger orders).
double gamma_frozen_derivs(const FrozenKernel& k, const BlockStructure& s, const Vec& x, const Vec& y,
                           std::span<const int> nu);

/// Matrix with eigenvalues of the symmetric pencil (A, B): lambda_min of B^{-1/2} A B^{-1/2}.
double min_generalized_eigenvalue(const Mat& A, const Mat& B);

}  // namespace kolmo
