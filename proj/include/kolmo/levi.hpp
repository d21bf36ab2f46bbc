#pragma once

#include "kolmo/coeffs.hpp"
#include "kolmo/kernel.hpp"
#include "kolmo/parametrix.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace kolmo {

/// Discretization of the Volterra iteration and of the potentials built on it.
struct QuadratureConfig {
  int time_panels = 256;      // midpoint panels for parametrix covariances
  int inner_panels = 32;      // midpoint panels for covariances inside the Volterra operator
  int time_nodes = 10;        // Volterra time slices
  int inner_time_nodes = 8;   // time nodes of each Volterra integral
  int outer_time_nodes = 12;  // time nodes of Phi
  int gh_order = 7;           // Gauss-Hermite order of the node clouds and of Phi
  int inner_gh_order = 6;     // Gauss-Hermite order of the Volterra integrals
  std::string space_rule = "gauss-hermite";
  double series_tol = 1e-4;
  int max_terms = 8;
  double quad_tol = 1e-3;     // declared relative accuracy of one p evaluation
  double envelope_scale = 1.0;
  double eps_factor = 0.1;    // epsilon = eps_factor * mu in Gamma^{mu+eps} comparisons
  double min_dt = kDefaultMinDt;
  int max_levi_dim = 3;
  bool keep_operator = false; // retain the dense node operator after the series is summed

  void validate() const;
};

/// Raised when the series has not met series_tol after max_terms terms.
class SeriesNotConverged : public NumericalError {
 public:
  SeriesNotConverged(const std::string& msg, double partial_norm, int terms)
      : NumericalError(msg), partial_norm_(partial_norm), terms_(terms) {}
  double partial_norm() const { return partial_norm_; }
  int terms() const { return terms_; }

 private:
  double partial_norm_;
  int terms_;
};

struct FieldEval {
  double value = 0.0;
  Vec grad;
  Mat hess;
  bool negative_flag = false;
};

struct LeviDiagnostics {
  int terms = 0;               // number of phi_k summed
  double tail = 0.0;           // empirical tail estimate relative to the series scale
  double last_ratio = 0.0;     // |phi_k| / |phi_{k-1}| of the last term
  double kappa = 0.0;          // fitted constant in |phi_1| <= kappa (T-t)^{alpha/2-1} Gamma^{mu+eps}
  double analytic_tail = 0.0;  // tail of the kappa-based majorant series, relative to its first term
  double probe_error = 0.0;    // Richardson disagreement of phi_2, relative to max |phi_1|
  double scale = 0.0;          // max |sum phi_k| on the nodes (scaled units)
  std::vector<double> term_norms;
  int nodes = 0;
  bool trivial = false;        // phi_1 vanishes identically
};

/// Levi solution for one target (T, y) on [t_min, T).
///
/// phi is stored on time slices x Gauss-Hermite clouds that follow the backward
/// drift curve e^{-(T-rho)B} y, normalized by the envelope Gaussian and by
/// (T-rho)^{1-alpha/2}; between nodes it is interpolated (cubic in the mapped
/// time, tensor Lagrange in the normalized space variable).
class LeviSolution {
 public:
  LeviSolution(const CoefficientField& c, const Drift& drift, const QuadratureConfig& q, double T, const Vec& y,
               double t_min);
  ~LeviSolution();
  LeviSolution(const LeviSolution&) = delete;
  LeviSolution& operator=(const LeviSolution&) = delete;

  double T() const;
  const Vec& y() const;
  double t_min() const;
  const LeviDiagnostics& diagnostics() const;
  const QuadratureConfig& config() const;

  int num_nodes() const;
  /// Node time and position.
  double node_time(int n) const;
  Vec node_point(int n) const;
  /// Scaled node values of phi_k (k >= 1) and of the sum.
  const std::vector<double>& term(int k) const;
  const std::vector<double>& phi_nodes() const;
  /// Converts a scaled node value to phi.
  double unscale(int n, double q) const;

  /// One Volterra step on scaled node values.
  std::vector<double> phi_next(const std::vector<double>& prev) const;

  /// phi at an arbitrary (r, eta) from the node interpolant.
  double phi_interp(double r, const Vec& eta) const;
  /// phi(t,x) = phi_1(t,x) + int int phi_1(t,x;r,eta) phi(r,eta): Nystrom extension.
  double phi(double t, const Vec& x) const;
  /// phi_1(t,x;T,y) evaluated directly.
  double phi1(double t, const Vec& x) const;
  /// phi_2(t,x) = int int phi_1(t,x;r,eta) phi_1(r,eta) with exact phi_1 on a rule of the given orders.
  double phi2_direct(double t, const Vec& x, int time_nodes, int gh_order) const;

  /// Phi(t,x) = int_t^T int P(t,x;tau,eta) phi(tau,eta) with x-derivatives.
  FieldEval big_phi(double t, const Vec& x, int want) const;
  /// p = P + Phi; negative values below -series_tol Gamma^mu are flagged, not clamped.
  FieldEval p(double t, const Vec& x, int want) const;

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

/// Anything that evaluates p(t,x;T,y) with x-derivatives.
class DensityEvaluator {
 public:
  virtual ~DensityEvaluator() = default;
  virtual FieldEval p(double t, const Vec& x, double T, const Vec& y, int want) const = 0;
  /// Declared relative accuracy of one evaluation.
  virtual double tolerance() const = 0;
  virtual const CoefficientField& coeffs() const = 0;
  virtual const Drift& drift() const = 0;
};

/// Evaluates p(t,x;T,y) for many targets, caching one solution per target (built on [0, T)).
class LeviEvaluator : public DensityEvaluator {
 public:
  LeviEvaluator(CoefficientField c, Drift drift, QuadratureConfig q);

  std::shared_ptr<const LeviSolution> solution(double T, const Vec& y) const;
  FieldEval p(double t, const Vec& x, double T, const Vec& y, int want) const override;
  double tolerance() const override;

  const CoefficientField& coeffs() const override { return c_; }
  const Drift& drift() const override { return drift_; }
  const QuadratureConfig& config() const { return q_; }
  /// p reduces to the parametrix (a_ij depend on t only, lower-order terms vanish).
  bool collapses() const;

 private:
  CoefficientField c_;
  Drift drift_;
  QuadratureConfig q_;
  mutable std::mutex m_;
  mutable std::map<std::vector<double>, std::shared_ptr<const LeviSolution>> cache_;
};

/// Convenience wrappers over a single-target solution.
struct SeriesValue {
  double value = 0.0;
  int k_used = 0;
  double tail_bound = 0.0;
};
SeriesValue phi_series(const CoefficientField& c, const Drift& drift, double t, const Vec& x, double T, const Vec& y,
                       const QuadratureConfig& q);
FieldEval big_phi(const CoefficientField& c, const Drift& drift, double t, const Vec& x, double T, const Vec& y,
                  const QuadratureConfig& q, int want);
FieldEval fundamental_solution(const CoefficientField& c, const Drift& drift, double t, const Vec& x, double T,
                               const Vec& y, const QuadratureConfig& q, int want);

}  // namespace kolmo
