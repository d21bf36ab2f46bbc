#pragma once

#include "kolmo/levi.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace kolmo {

enum class Status { Pass, Fail, Inconclusive };
const char* status_name(Status s);

struct VerificationReport {
  std::string check_name;
  Status status = Status::Inconclusive;
  std::vector<std::pair<std::string, double>> measured;
  double tolerance = 0.0;
  long samples = 0;
  std::string notes;
  // Optional fitted-constant scaling table.
  std::vector<std::string> table_header;
  std::vector<std::vector<double>> table;

  double get(const std::string& key) const;  // NaN when absent
  void set(const std::string& key, double v);
};

/// JSON object {check_name, status, measured{...}, tolerance, samples, notes}; numbers with 17 digits.
std::string report_json(const VerificationReport& r, int indent = 2);
std::string reports_json(const std::vector<VerificationReport>& rs, int indent = 2);
/// CSV of the scaling tables: check_name,<header...>.
std::string reports_table_csv(const std::vector<VerificationReport>& rs);

/// Wraps an evaluator and multiplies every value by `factor` (sensitivity controls).
class ScaledDensity : public DensityEvaluator {
 public:
  ScaledDensity(const DensityEvaluator& base, double factor) : base_(base), factor_(factor) {}
  FieldEval p(double t, const Vec& x, double T, const Vec& y, int want) const override;
  double tolerance() const override { return base_.tolerance(); }
  const CoefficientField& coeffs() const override { return base_.coeffs(); }
  const Drift& drift() const override { return base_.drift(); }

 private:
  const DensityEvaluator& base_;
  double factor_;
};

/// p(t,x;T,y) against int p(t,x;s,eta) p(s,eta;T,y) d eta. Pass iff the relative error is at most
/// 3 x composed tolerance (two evaluations inside the integral, the left side, and the
/// Gauss-Hermite refinement difference).
VerificationReport check_chapman_kolmogorov(const DensityEvaluator& p, double t, const Vec& x, double s, double T,
                                            const Vec& y, int gh_order = 7);

/// int p(t,x;T,y) dy against e^{abar (T-t)}; pass iff within rel_tol e^{abar (T-t)}.
VerificationReport check_mass(const DensityEvaluator& p, double abar, double t, const Vec& x, double T,
                              int gh_order = 8, double rel_tol = 1e-4);

/// Points x = e^{-hB}(y - D(sqrt h) z) for Halton z in [-box, box]^N, one set per horizon h.
struct BoundsGrid {
  double T = 1.0;
  Vec y;
  std::vector<double> horizons;  // T - t values
  int points = 48;
  double box = 2.5;
  std::uint64_t seed = 1;
};

/// Fits sup p/G, sup |grad p|/G, sup |hess p|/G (G = Gamma^{mu+eps}) per horizon and their log-log slopes
/// (expected 0, -1/2, -1), the lower constant c_bar for the best mu_bar among the candidates, and
/// checks stability of every fit under a 2x denser grid.
VerificationReport check_gaussian_bounds(const DensityEvaluator& p, const BoundsGrid& grid, double eps,
                                         double slope_tol, std::vector<double> mu_bar_candidates = {},
                                         double stability_tol = 0.2);

using ScalarFn = std::function<double(double t, const Vec& x)>;

/// |u(s, e^{(s-t)B}x) - u(t,x) + int_t^s (Au - f)(tau, e^{(tau-t)B}x) dtau| by the midpoint rule.
double residual_along_Y(const ScalarFn& u, const ScalarFn& Au, const ScalarFn& f, const Drift& drift, double t,
                        const Vec& x, double s, int steps);

/// (A p)(t,x) = 1/2 sum a_ij d_ij p + sum a_i d_i p + a p for the density with target (T, y).
ScalarFn generator_applied(const DensityEvaluator& p, double T, const Vec& y);

/// Residual check for u = p(.,.;T,y): pass iff residual <= factor x composed tolerance x scale.
VerificationReport check_residual(const DensityEvaluator& p, double t, const Vec& x, double s, double T,
                                  const Vec& y, int steps = 64, double factor = 5.0);

enum class HolderKind { Cd, CY, CB0, CB1, CB2 };
const char* holder_kind_name(HolderKind k);
HolderKind parse_holder_kind(const std::string& s);

struct HolderEstimate {
  HolderKind kind = HolderKind::Cd;
  double value = 0.0;
  long pairs_used = 0;
};

/// Sampling region: t in [t0, t1], x = center(t) + D(scale) u with u uniform in [-1, 1]^N, where
/// center(t) = e^{-(T_flow - t)B} center when follow_flow is set; time increments up to max_dt,
/// spatial increments up to scale (intrinsic).
struct HolderDomain {
  double t0 = 0.0, t1 = 1.0;
  Vec center;
  double scale = 1.0;
  double max_dt = 0.5;
  bool follow_flow = false;
  double T_flow = 1.0;
};

/// f evaluator returning value and derivatives in the first d coordinates.
using JetFn = std::function<FieldEval(double t, const Vec& x, int want)>;

/// Sample-sup of the semi-norm. The pair sequence is a fixed function of the seed, so the estimate is
/// monotone in `samples`. For CB2, f_Y supplies the a.e.-Lie derivative (required).
HolderEstimate holder_seminorm(const JetFn& f, HolderKind kind, const Drift& drift, double exponent, int samples,
                               std::uint64_t seed, const HolderDomain& dom, const ScalarFn& f_Y = {});

/// Ratios (e^{tB})_{hk} / t^{h-k} at t in {1e-2, 1e-3, 1e-4}; blocks with h > k + n of B^n are checked to vanish.
VerificationReport check_expm_block_orders(const Drift& drift);

}  // namespace kolmo
