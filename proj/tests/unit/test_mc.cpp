#include "helpers.hpp"

#include "kolmo/mc_oracle.hpp"
#include "kolmo/parallel.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace kolmo;
using kolmo::test::vec;

namespace {

McConfig small() {
  McConfig cfg;
  cfg.paths = 40000;
  cfg.steps = 20;
  cfg.bins = 10;
  cfg.chunk = 4096;
  cfg.seed = 11;
  return cfg;
}

}  // namespace

TEST(Mc, ThreadCountDoesNotChangeResults) {
  const Model m = test::data_model("langevin_var.json");
  set_threads(1);
  const McResult a = mc_simulate(m.coeffs, *m.drift, 0.0, vec({0.1, 0.0}), 1.0, small());
  set_threads(3);
  const McResult b = mc_simulate(m.coeffs, *m.drift, 0.0, vec({0.1, 0.0}), 1.0, small());
  set_threads(1);
  EXPECT_EQ(a.mass, b.mass);
  EXPECT_EQ(a.mean(0), b.mean(0));
  EXPECT_EQ(a.cov(1, 1), b.cov(1, 1));
}

TEST(Mc, MomentsOfConstantModel) {
  // X_T = (x1 + W_1, x2 + x1 + int_0^1 W_s ds): mean (x1, x2 + x1), covariance [[1, 1/2], [1/2, 1/3]].
  const Model m = test::data_model("langevin_const.json");
  const McResult r = mc_simulate(m.coeffs, *m.drift, 0.0, vec({0.5, -0.5}), 1.0, small());
  EXPECT_NEAR(r.mean(0), 0.5, 5 * r.mean_se(0));
  EXPECT_NEAR(r.mean(1), 0.0, 5 * r.mean_se(1));
  EXPECT_NEAR(r.cov(0, 0), 1.0, 5 * r.cov_se(0, 0));
  EXPECT_NEAR(r.cov(0, 1), 0.5, 5 * r.cov_se(0, 1));
  EXPECT_NEAR(r.cov(1, 1), 1.0 / 3.0, 5 * r.cov_se(1, 1));
  double total = r.outside;
  for (double v : r.mass) total += v;
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Mc, KillingWeight) {
  const Model m = test::data_model("langevin_abar.json");
  const McResult r = mc_simulate(m.coeffs, *m.drift, 0.0, vec({0, 0}), 1.0, small());
  EXPECT_NEAR(r.weight, std::exp(0.5), 1e-14);
}

TEST(Mc, RejectsFirstOrderTerms) {
  const Model m = parse_model(R"J({"N": 2, "d": 1, "B": [[0,0],[1,0]],
                                  "coefficients": {"a2": [["1"]], "a1": ["0.3"]}})J");
  EXPECT_THROW(mc_simulate(m.coeffs, *m.drift, 0.0, vec({0, 0}), 1.0, small()), ConfigError);
}

TEST(Mc, HistogramAgreesWithExactDensity) {
  const Model m = test::data_model("langevin_const.json");
  const LeviEvaluator ev(m.coeffs, *m.drift, m.quad);
  const McResult r = mc_simulate(m.coeffs, *m.drift, 0.0, vec({0, 0}), 1.0, small());
  const McComparison c = mc_compare(r, bin_mass_quadrature(ev, 0.0, vec({0, 0}), 1.0), 1.0);
  EXPECT_LT(c.l1, 0.06);
  EXPECT_GT(c.p_inside, 0.99);
}
