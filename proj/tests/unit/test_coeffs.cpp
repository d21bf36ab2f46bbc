#include "helpers.hpp"

#include "kolmo/coeffs.hpp"
#include "kolmo/model.hpp"
#include "kolmo/parametrix.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace kolmo;
using kolmo::test::vec;

TEST(Coeffs, EllipticityObservedWithinDeclared) {
  const Model m = test::data_model("langevin_var.json");
  const EllipticityResult e = validate_ellipticity(m.coeffs, 2000, 1);
  EXPECT_TRUE(e.ok);
  EXPECT_GT(e.observed_mu, 1.2);
  EXPECT_LE(e.observed_mu, 1.5);
}

TEST(Coeffs, EllipticityViolationDetected) {
  const Model m = parse_model(R"J({"N": 2, "d": 1, "B": [[0,0],[1,0]], "mu": 1.1,
                                  "coefficients": {"a2": [["1 + 0.5*sin(x2)"]]}})J");
  const EllipticityResult e = validate_ellipticity(m.coeffs, 2000, 1);
  EXPECT_FALSE(e.ok);
  EXPECT_GT(e.observed_mu, 1.1);
}

TEST(Coeffs, HolderModulusMonotoneInSamples) {
  const Model m = test::data_model("langevin_var.json");
  double prev = 0.0;
  for (int n : {50, 200, 800}) {
    const HolderModulus h = estimate_holder_modulus(m.coeffs, m.structure, n, 3);
    ASSERT_FALSE(h.values.empty());
    EXPECT_GE(h.values[0], prev);
    prev = h.values[0];
  }
  EXPECT_TRUE(std::isfinite(prev));
}

TEST(Coeffs, FlagsFollowExpressions) {
  EXPECT_TRUE(test::data_model("langevin_const.json").coeffs.a2_constant());
  EXPECT_TRUE(test::data_model("langevin_step.json").coeffs.a2_time_only());
  EXPECT_TRUE(test::data_model("langevin_step.json").coeffs.a2_may_jump());
  EXPECT_FALSE(test::data_model("langevin_var.json").coeffs.a2_time_only());
  EXPECT_FALSE(test::data_model("langevin_abar.json").coeffs.lower_order_zero());
}

TEST(Parametrix, DerivativesMatchFiniteDifferences) {
  const Model m = test::data_model("langevin_var.json");
  const Drift& dr = *m.drift;
  const Vec y = vec({0.3, 0.1});
  const Vec x = vec({0.0, -0.1});
  const ParametrixEval e = parametrix_eval(m.coeffs, dr, 0.4, x, 1.0, y, kWantGrad | kWantHess | kWantExtended);
  const double h = 1e-5;
  auto at = [&](int i, double dx) {
    Vec z = x;
    z(i) += dx;
    return parametrix_eval(m.coeffs, dr, 0.4, z, 1.0, y, kWantValue).value;
  };
  const double fd0 = (at(0, h) - at(0, -h)) / (2 * h);
  const double fd1 = (at(1, h) - at(1, -h)) / (2 * h);
  const double fd00 = (at(0, h) - 2 * e.value + at(0, -h)) / (h * h);
  EXPECT_NEAR(e.grad(0), fd0, 1e-7 * (1 + std::abs(fd0)));
  EXPECT_NEAR(e.extended_grad(1), fd1, 1e-7 * (1 + std::abs(fd1)));
  EXPECT_NEAR(e.hess(0, 0), fd00, 1e-4 * (1 + std::abs(fd00)));
}

TEST(Parametrix, TimeOnlyCoefficientsHaveNoMismatch) {
  const Model m = test::data_model("langevin_step.json");
  for (double t : {0.0, 0.3, 0.6})
    EXPECT_EQ(parametrix_mismatch(m.coeffs, *m.drift, t, vec({0.2, -0.4}), 1.0, vec({0.1, 0.3})), 0.0);
}

TEST(Parametrix, ConstantCoefficientsReduceToGamma) {
  const Model m = test::data_model("langevin_const2.json");
  const Vec x = vec({0.2, -0.1}), y = vec({0.0, 0.3});
  EXPECT_NEAR(parametrix_eval(m.coeffs, *m.drift, 0.25, x, 1.0, y, kWantValue).value,
              gamma_delta(2.0, 0.25, x, 1.0, y, *m.drift), 1e-13);
}

TEST(Model, RejectsMalformedInput) {
  EXPECT_THROW(parse_model(R"J({"N": 2, "d": 1, "B": [[0,0],[1,0]], "coefficients": {"a2": [["1"]]}, "extra": 1})J"),
               ConfigError);
  EXPECT_THROW(parse_model(R"J({"N": 2, "d": 1, "B": [[0,0,0],[1,0,0]], "coefficients": {"a2": [["1"]]}})J"),
               ConfigError);
  EXPECT_THROW(parse_model(R"J({"N": 2, "d": 1, "B": [[0,0],[1,0]], "coefficients": {"a2": [["1", "0"]]}})J"),
               ConfigError);
  EXPECT_THROW(parse_model(R"J({"N": 2, "d": 1, "B": [[0,0],[1,0]], "mu": 0.5, "coefficients": {"a2": [["1"]]}})J"),
               ConfigError);
  try {
    parse_model(R"J({"N": 2, "d": 1, "B": [[0,0],[1,0]], "coefficients": {"a2": [["1 +"]]}})J");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("a2[0][0]: parse error at line 1, column 4"), std::string::npos);
  }
  EXPECT_THROW(parse_model(R"J({"N": 2, "d": 1, "B": [[0,0],[1,0]], "coefficients": {"a2": [["1"]]},
                               "quadrature": {"panels": 4}})J"),
               ConfigError);
}

TEST(Model, AsymmetricDiffusionRejected) {
  EXPECT_THROW(
      {
        const Model m = parse_model(R"J({"N": 2, "d": 2, "B": [[0,0],[0,0]], "mu": 2,
                                        "coefficients": {"a2": [["1", "0.5"], ["0", "1"]]}})J");
        m.coeffs.a2(0.0, vec({0.0, 0.0}));
      },
      ConfigError);
}

TEST(Model, NonHypoellipticModelLoadsWithoutDrift) {
  const Model m = test::data_model("degenerate.json");
  EXPECT_FALSE(m.structure.hoermander_ok);
  EXPECT_FALSE(m.drift.has_value());
  EXPECT_THROW(m.require_drift(), ConfigError);
  EXPECT_EQ(structure_json(test::data_model("langevin_const.json").structure, 2, 1),
            R"J({"N":2,"d":1,"dims":[1,1],"Q":4,"hoermander_ok":true})J");
}
