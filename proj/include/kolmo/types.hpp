#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace kolmo {

/// Largest state dimension supported by the kernel paths.
inline constexpr int kMaxDim = 10;

// Small dense types with fixed-capacity storage: no heap traffic in quadrature loops.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;

/// Invalid input, malformed model file, unsupported configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical procedure failed (factorization, overflow, non-convergence).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace kolmo
