#include "helpers.hpp"

#include "kolmo/cauchy.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace kolmo;
using kolmo::test::vec;

namespace {

CauchyProblem problem(const std::string& g, const std::string& f, int N, double growth = 0.0) {
  CauchyProblem cp;
  cp.g = Expr::parse(g, N);
  cp.f = Expr::parse(f, N);
  cp.T = 1.0;
  cp.growth_C = growth;
  return cp;
}

}  // namespace

TEST(Cauchy, UnitSourceGivesMinusElapsedTime) {
  const Model m = test::data_model("langevin_const.json");
  const LeviEvaluator ev(m.coeffs, *m.drift, m.quad);
  const CauchySolver s(ev, problem("0", "1", 2));
  EXPECT_TRUE(s.fast_path());
  for (double t : {0.0, 0.5, 0.9}) EXPECT_NEAR(s.solve(t, vec({0.3, -0.2})), -(1.0 - t), 1e-9);
}

TEST(Cauchy, LinearTerminalDatumFollowsTheFlow) {
  // g(y) = y2 with B = [[0,0],[1,0]]: u(t,x) = x2 + (T - t) x1.
  const Model m = test::data_model("langevin_const.json");
  const LeviEvaluator ev(m.coeffs, *m.drift, m.quad);
  const CauchySolver s(ev, problem("x2", "0", 2));
  EXPECT_NEAR(s.solve(0.25, vec({0.4, -1.0})), -1.0 + 0.75 * 0.4, 1e-9);
}

TEST(Cauchy, VariableCoefficientsUseTheDensity) {
  const Model m = test::data_model("langevin_var.json");
  const LeviEvaluator ev(m.coeffs, *m.drift, m.quad);
  const CauchySolver s(ev, problem("1", "0", 2));
  EXPECT_FALSE(s.fast_path());
  EXPECT_NEAR(s.solve(0.5, vec({0.1, 0.2})), 1.0, 1e-3);
}

TEST(Cauchy, GrowthCheck) {
  const Model m = test::data_model("langevin_const.json");
  const LeviEvaluator ev(m.coeffs, *m.drift, m.quad);
  const CauchySolver tame(ev, problem("1", "0", 2, 0.1));
  EXPECT_NO_THROW(tame.check_growth(1.0));
  const CauchySolver wild(ev, problem("exp(x1^2)", "0", 2, 5.0));
  EXPECT_THROW(wild.check_growth(1.0), ConfigError);
  EXPECT_NO_THROW(wild.check_growth(0.01));
}

TEST(Cauchy, RejectsBadConfig) {
  const Model m = test::data_model("langevin_const.json");
  const LeviEvaluator ev(m.coeffs, *m.drift, m.quad);
  CauchyConfig cfg;
  cfg.gh_order = 1;
  EXPECT_THROW(CauchySolver(ev, problem("1", "0", 2), cfg), ConfigError);
}

TEST(Cauchy, TerminalContinuityDecreases) {
  const Model m = test::data_model("langevin_const.json");
  const LeviEvaluator ev(m.coeffs, *m.drift, m.quad);
  const CauchyProblem cp = problem("sin(x1)", "0", 2);
  const CauchySolver s(ev, cp);
  const ContinuityResult r = terminal_continuity_check(s, cp, vec({0.5, 0.0}), {0.1, 0.03, 0.01, 0.003});
  EXPECT_TRUE(r.monotone);
  EXPECT_NEAR(r.slope, 1.0, 0.1);  // u(T-h) - g = (e^{-h/2} - 1) sin(y1) = O(h)
}

TEST(Cauchy, LogLogSlope) {
  EXPECT_NEAR(loglog_slope({1, 2, 4, 8}, {3, 12, 48, 192}), 2.0, 1e-12);
  EXPECT_NEAR(loglog_slope({1, 2, 4}, {1, 0, 0.25}), -1.0, 1e-12);
}
