#pragma once

#include "kolmo/coeffs.hpp"
#include "kolmo/kernel.hpp"
#include "kolmo/levi.hpp"

#include <optional>
#include <string>

namespace kolmo {

/// Parsed model file.
///
/// {N, d, B: row-major array (flat or nested), T_bar, mu, alpha,
///  coefficients: {a2: [[expr]], a1: [expr], a0: expr}, quadrature: {...}, growth_C}
/// Expressions are strings in the coefficient language or plain numbers.
struct Model {
  int N = 0;
  int d = 0;
  Mat B;
  double T_bar = 1.0;
  double mu = 1.0;
  double alpha = 1.0;
  double growth_C = 0.0;
  CoefficientField coeffs;
  QuadratureConfig quad;
  BlockStructure structure;       // hoermander_ok may be false
  std::optional<Drift> drift;     // present iff the Kalman condition holds

  /// Throws ConfigError when the Hörmander (Kalman rank) condition fails.
  const Drift& require_drift() const;
};

Model parse_model(const std::string& json_text);
Model load_model(const std::string& path);

/// {"N":..,"d":..,"dims":[..],"Q":..,"hoermander_ok":..} (compact, keys in this order).
std::string structure_json(const BlockStructure& s, int N, int d);

}  // namespace kolmo
