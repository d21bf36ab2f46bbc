#pragma once

#include "kolmo/expr.hpp"
#include "kolmo/structure.hpp"
#include "kolmo/types.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace kolmo {

/// Coefficients a_ij (d x d), a_i (d) and a of the second-order part.
/// Evaluation is reentrant: the compiled expressions hold no mutable state.
class CoefficientField {
 public:
  CoefficientField() = default;
  CoefficientField(int N, int d, std::vector<Expr> a2_row_major, std::vector<Expr> a1, Expr a0, double mu,
                   double alpha, double T_bar);

  /// a_ij = delta * I_d, zero lower-order terms.
  static CoefficientField constant_diagonal(int N, int d, double delta, double mu, double alpha = 1.0,
                                            double T_bar = 1.0);

  /// Process-unique identity of this field's content (copies share it).
  std::uint64_t id() const { return id_; }
  int N() const { return N_; }
  int d() const { return d_; }
  double mu() const { return mu_; }
  double alpha() const { return alpha_; }
  double T_bar() const { return T_bar_; }

  /// d x d diffusion matrix at (t, x). Throws on non-finite values or textual asymmetry at evaluation.
  Mat a2(double t, const Vec& x) const;
  double a2_entry(int i, int j, double t, const Vec& x) const;
  Vec a1(double t, const Vec& x) const;
  double a0(double t, const Vec& x) const;

  const Expr& a2_expr(int i, int j) const { return a2_[static_cast<std::size_t>(i * d_ + j)]; }
  const Expr& a1_expr(int i) const { return a1_[static_cast<std::size_t>(i)]; }
  const Expr& a0_expr() const { return a0_; }

  bool a2_constant() const;
  /// True when no a_ij depends on x (time-only or constant).
  bool a2_time_only() const;
  bool lower_order_zero() const;
  /// Some a_ij contains step(), so a_ij may jump along the frozen curve.
  bool a2_may_jump() const;
  bool a1_zero() const;
  /// a0 is a constant (value in a0_constant_value()).
  bool a0_constant() const { return a0_.is_constant(); }
  double a0_constant_value() const { return a0_.constant_value(); }

  /// Declared per-coefficient Hölder norms, keyed "a11", "a1_1", "a0", ... (optional input).
  std::map<std::string, double> holder_norms;

 private:
  int N_ = 0;
  int d_ = 0;
  std::vector<Expr> a2_;
  std::vector<Expr> a1_;
  Expr a0_;
  double mu_ = 1.0;
  double alpha_ = 1.0;
  double T_bar_ = 1.0;
  std::uint64_t id_ = 0;
};

struct EllipticityResult {
  bool ok = false;
  double observed_mu = 0.0;
  int samples = 0;
};

/// Quasi-random (Halton) sampling of (t, x) in [0, T_bar] x [-R, R]^N.
EllipticityResult validate_ellipticity(const CoefficientField& c, int samples, std::uint64_t seed, double R = 5.0);

/// Empirical Hölder quotient sup |a(t,x) - a(t,y)| / |x - y|_B^alpha, per coefficient.
struct HolderModulus {
  std::vector<std::string> names;
  std::vector<double> values;
  long pairs = 0;
};

/// Pairs are generated from the seed as a fixed sequence, so the sup is monotone in `samples`.
HolderModulus estimate_holder_modulus(const CoefficientField& c, const BlockStructure& s, int samples,
                                      std::uint64_t seed, double R = 5.0);

/// Coefficients a_ij evaluated along the curve tau -> e^{(tau - s)B} v (the frozen operator's coefficients).
Mat frozen_coefficients(const CoefficientField& c, const Mat& exp_tau_minus_s_B, const Vec& v, double tau);

}  // namespace kolmo
