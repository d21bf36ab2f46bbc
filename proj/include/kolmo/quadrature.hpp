#pragma once

#include <cstdint>

#include <span>
#include <vector>

namespace kolmo {

/// One-dimensional quadrature rule.
struct Rule1D {
  std::vector<double> x;
  std::vector<double> w;
  int size() const { return static_cast<int>(x.size()); }
};

/// Gauss-Legendre on [-1, 1]. Cached, thread safe.
const Rule1D& gauss_legendre(int n);

/// Gauss-Hermite for the standard normal: sum w f(x) ~ E f(Z), Z ~ N(0,1). Weights sum to 1.
const Rule1D& gauss_hermite(int n);

/// Gauss-Legendre mapped to [a, b].
Rule1D gauss_legendre_on(int n, double a, double b);

/// Fixed-order pairwise summation: result depends only on the order of `v`.
double pairwise_sum(std::span<const double> v);

/// Barycentric weights for Lagrange interpolation on distinct nodes.
std::vector<double> barycentric_weights(std::span<const double> nodes);

/// Lagrange basis values at `x` using precomputed barycentric weights.
/// Exact node hits return a unit vector.
void barycentric_basis(std::span<const double> nodes, std::span<const double> bw, double x, std::span<double> out);

/// Map of the unit interval concentrating nodes near both ends:
/// S(u) = u^p / (u^p + (1-u)^p), p >= 1, so S'(u) ~ u^{p-1} near 0 and symmetric near 1.
struct EndpointMap {
  double p = 1.0;
  double operator()(double u) const;
  double deriv(double u) const;
  double inverse(double s) const;
};

/// Exponent used for weakly singular endpoint behaviour (s^{a-1}): p = 2/a clamped to [1, 4].
double endpoint_exponent(double alpha);

/// Iterates a tensor grid of `dim` copies of a rule with `n` points.
/// Index digits are stored in `idx`; returns false when exhausted.
bool next_multi_index(std::vector<int>& idx, int n);

/// Coordinate `dim` (< 12) of Halton point `i`: radical inverse of i in the dim-th prime base.
double halton(std::uint64_t i, int dim);

/// Uniform double in [0, 1) from the top 53 bits of a 64-bit word.
inline double unit_from_bits(std::uint64_t v) { return static_cast<double>(v >> 11) * 0x1.0p-53; }

}  // namespace kolmo
