#pragma once

#include "kolmo/levi.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace kolmo {

struct McConfig {
  long paths = 1000000;
  int steps = 200;
  std::uint64_t seed = 1;
  int bins = 30;              // per dimension
  double range_sigmas = 4.0;  // histogram half-width in standard deviations of the reference covariance
  long chunk = 8192;          // paths per independently seeded chunk
};

/// Simulated law of X_T for dX = B X dt + sigma(t, X) dW (sigma sigma^T = a2, noise in the first d
/// coordinates), started at X_t = x. Steps are exponential Euler: the flow e^{dt B} is exact and
/// the noise over a step is exact for coefficients frozen at the step's left end.
struct McResult {
  long paths = 0;
  int steps = 0;
  double weight = 1.0;        // e^{abar (T - t)} applied to every path
  Vec mean, mean_se;
  Mat cov, cov_se;
  // Histogram on a box aligned with the coordinate axes, dimension 0 fastest.
  int bins = 0;
  Vec lo, width;
  std::vector<double> mass;   // weighted fraction per bin
  double outside = 0.0;       // weighted fraction outside the box
};

/// Chunks are seeded from (seed, chunk index) and reduced in chunk order, so the result does not
/// depend on the thread count.
McResult mc_simulate(const CoefficientField& c, const Drift& drift, double t, const Vec& x, double T,
                     const McConfig& cfg);

/// Integral of the reference density over the box [lo, hi].
using BinMassFn = std::function<double(const Vec& lo, const Vec& hi)>;

/// Tensor Gauss-Legendre rule with `sub` points per dimension on each bin.
BinMassFn bin_mass_quadrature(const DensityEvaluator& p, double t, const Vec& x, double T, int sub = 3);

/// p = P + Phi: P integrated with `sub` points per dimension, Phi taken at the bin centre
/// for bins whose P-mass exceeds `phi_threshold` (smaller bins use P alone).
BinMassFn bin_mass_levi(const LeviEvaluator& p, double t, const Vec& x, double T, int sub = 3,
                        double phi_threshold = 1e-4);

struct McComparison {
  double l1 = 0.0;            // sum over bins |mc - p| plus the outside-box difference
  double p_inside = 0.0;      // reference mass inside the box
  std::vector<double> p_mass;
};

McComparison mc_compare(const McResult& mc, const BinMassFn& bin_mass, double expected_total);

/// Centre of bin `b` and its box.
Vec mc_bin_center(const McResult& mc, std::size_t b);

}  // namespace kolmo
