#pragma once

#include "kolmo/types.hpp"

#include <span>
#include <vector>

namespace kolmo {

/// Block chain of a drift matrix B in canonical lower-block form.
///
/// dims[j] is the size of block j (dims[0] == d), cumdims[j] the index one
/// past the end of block j. Q is the homogeneous dimension sum (2j+1) dims[j].
struct BlockStructure {
  int N = 0;
  int d = 0;
  std::vector<int> dims;
  std::vector<int> cumdims;
  int Q = 0;
  bool hoermander_ok = false;

  int r() const { return static_cast<int>(dims.size()) - 1; }
  /// Block index of coordinate i (0-based).
  int block_of(int i) const;
  /// d_1, or 0 when there is no degenerate block.
  int first_degenerate_dim() const { return dims.size() > 1 ? dims[1] : 0; }
};

struct KalmanResult {
  int rank = 0;
  bool ok = false;
};

inline constexpr double kDefaultRankTol = 1e-10;

/// Numerical rank of [R, BR, ..., B^{N-1}R], R the injection of the first d coordinates.
KalmanResult kalman_rank(const Eigen::MatrixXd& B, int d, double tol = kDefaultRankTol);

/// Validates that B is in canonical block form and extracts the chain.
///
/// A B failing the Kalman condition yields hoermander_ok == false (no throw);
/// a B passing it but not in canonical form throws ConfigError.
BlockStructure block_decompose(const Eigen::MatrixXd& B, int d, double tol = kDefaultRankTol);

/// |x|_B = sum_j sum_{i in block j} |x_i|^{1/(2j+1)}
double anisotropic_norm(std::span<const double> x, const BlockStructure& s);
double anisotropic_norm(const Vec& x, const BlockStructure& s);

/// D(lambda) = diag(lambda I_{d_0}, lambda^3 I_{d_1}, ..., lambda^{2r+1} I_{d_r}).
Mat dilation(double lambda, const BlockStructure& s);

/// [nu]_B = sum_j (2j+1) * (sum of nu over block j).
int b_length(std::span<const int> nu, const BlockStructure& s);

/// |D(lambda) x|_B == lambda |x|_B to relative tolerance `rel_tol`.
bool norm_homogeneity_check(const Vec& x, double lambda, const BlockStructure& s, double rel_tol = 1e-12);

}  // namespace kolmo
