#pragma once

#include "kolmo/coeffs.hpp"
#include "kolmo/kernel.hpp"

#include <cstddef>
#include <memory>

namespace kolmo {

/// Value and x-derivatives of the parametrix P(t,x;T,y) = Gamma^{(T,y)}(t,x;T,y).
struct ParametrixEval {
  double value = 0.0;
  Vec grad;           // d entries
  Mat hess;           // d x d
  Vec extended_grad;  // d + d_1 entries
};

enum DerivFlags : int { kWantValue = 0, kWantGrad = 1, kWantHess = 2, kWantExtended = 4 };

/// Frozen kernel of the parametrix: covariance C^{(T,y)}(t,T) on `panels` midpoint panels.
/// Uses the process-wide memo cache (size bound: KOLMO_CACHE_MB, default 64).
std::shared_ptr<const FrozenKernel> parametrix_kernel(const CoefficientField& c, const Drift& drift, double t,
                                                      double T, const Vec& y, int panels,
                                                      double min_dt = kDefaultMinDt);

ParametrixEval eval_kernel(const FrozenKernel& k, const BlockStructure& s, const Vec& x, const Vec& y, int want);

ParametrixEval parametrix_eval(const CoefficientField& c, const Drift& drift, double t, const Vec& x, double T,
                               const Vec& y, int want, int panels = 256, double min_dt = kDefaultMinDt);

/// 1/2 sum_{i,j<d} a_ij(t, e^{(t-s)B} v) hess_ij.
double frozen_apply(const CoefficientField& c, const Drift& drift, double s_freeze, const Vec& v, double t,
                    const ParametrixEval& e);

/// (A - A^{(T,y)}) P evaluated from a ParametrixEval carrying value, grad and hess.
double mismatch_from_eval(const CoefficientField& c, const Drift& drift, double t, const Vec& x, double T,
                          const Vec& y, const ParametrixEval& e);

/// phi_1(t,x;T,y) = (A - A^{(T,y)}) P(t,x;T,y), lower-order terms of A included.
double parametrix_mismatch(const CoefficientField& c, const Drift& drift, double t, const Vec& x, double T,
                           const Vec& y, int panels = 256, double min_dt = kDefaultMinDt);

/// Memo cache statistics (process wide).
struct CacheStats {
  std::size_t hits = 0;
  std::size_t misses = 0;
  std::size_t entries = 0;
  std::size_t budget_bytes = 0;
};
CacheStats parametrix_cache_stats();
void parametrix_cache_clear();

}  // namespace kolmo
