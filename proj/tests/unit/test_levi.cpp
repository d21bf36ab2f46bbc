#include "helpers.hpp"

#include "kolmo/levi.hpp"
#include "kolmo/parametrix.hpp"
#include "kolmo/quadrature.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace kolmo;
using kolmo::test::vec;

namespace {

// One-dimensional elliptic model: a(x) = 1 + 0.25 sin(x), B = 0.
Model elliptic_1d() {
  return parse_model(R"J({"N": 1, "d": 1, "B": [[0]], "mu": 1.5, "alpha": 1,
                         "coefficients": {"a2": [["1 + 0.25*sin(x1)"]]}})J");
}

double a_of(double x) { return 1.0 + 0.25 * std::sin(x); }

// phi_1(t,x;T,y) = 1/2 (a(x) - a(y)) d^2/dx^2 of the N(y, a(y)(T-t)) density at x, by hand.
double phi1_exact(double t, double x, double T, double y) {
  const double v = a_of(y) * (T - t);
  const double z = x - y;
  const double g = std::exp(-z * z / (2.0 * v)) / std::sqrt(2.0 * M_PI * v);
  return 0.5 * (a_of(x) - a_of(y)) * g * (z * z / (v * v) - 1.0 / v);
}

// phi_2 by brute force: tau = t + (T - t) sin^2(theta) removes both endpoint singularities;
// xi by a uniform trapezoid rule resolving the narrower factor.
double phi2_brute(double t, double x, double T, double y) {
  const Rule1D th = gauss_legendre_on(160, 0.0, 0.5 * M_PI);
  double total = 0.0;
  for (std::size_t k = 0; k < th.x.size(); ++k) {
    const double s = std::sin(th.x[k]), c = std::cos(th.x[k]);
    const double tau = t + (T - t) * s * s;
    const double jac = 2.0 * (T - t) * s * c;
    const double s1 = std::sqrt(1.25 * (tau - t)), s2 = std::sqrt(1.25 * (T - tau));
    const double h = std::min(s1, s2) / 12.0;
    const double lo = std::min(x, y) - 12.0 * std::max(s1, s2), hi = std::max(x, y) + 12.0 * std::max(s1, s2);
    const long n = static_cast<long>(std::ceil((hi - lo) / h));
    std::vector<double> parts(static_cast<std::size_t>(n + 1));
    for (long i = 0; i <= n; ++i) {
      const double xi = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n);
      const double w = (i == 0 || i == n) ? 0.5 : 1.0;
      parts[static_cast<std::size_t>(i)] = w * phi1_exact(t, x, tau, xi) * phi1_exact(tau, xi, T, y);
    }
    total += th.w[k] * jac * pairwise_sum(parts) * (hi - lo) / static_cast<double>(n);
  }
  return total;
}

}  // namespace

TEST(Levi, Phi1MatchesHandFormulaIn1D) {
  const Model m = elliptic_1d();
  for (double x : {-1.0, 0.2, 0.9, 2.0}) {
    const double got = parametrix_mismatch(m.coeffs, *m.drift, 0.3, vec({x}), 1.0, vec({0.7}));
    EXPECT_NEAR(got, phi1_exact(0.3, x, 1.0, 0.7), 1e-10 * (1.0 + std::abs(got)));
  }
}

TEST(Levi, Phi2AgainstBruteForceIn1D) {
  const Model m = elliptic_1d();
  const LeviSolution sol(m.coeffs, *m.drift, m.quad, 1.0, vec({0.7}), 0.0);
  double scale = 0.0;
  std::vector<std::pair<double, double>> pts = {{0.0, 0.2}, {0.0, 0.7}, {0.5, 1.3}, {0.8, 0.5}, {0.0, -0.6}};
  std::vector<double> ref, direct;
  for (auto [t, x] : pts) {
    ref.push_back(phi2_brute(t, x, 1.0, 0.7));
    direct.push_back(sol.phi2_direct(t, vec({x}), 16, 12));
    scale = std::max(scale, std::abs(ref.back()));
  }
  for (std::size_t i = 0; i < pts.size(); ++i)
    EXPECT_NEAR(direct[i], ref[i], 2e-3 * scale) << "t=" << pts[i].first << " x=" << pts[i].second;
}

TEST(Levi, StoredSecondTermAgainstBruteForceIn1D) {
  const Model m = elliptic_1d();
  const LeviSolution sol(m.coeffs, *m.drift, m.quad, 1.0, vec({0.7}), 0.0);
  ASSERT_GE(sol.diagnostics().terms, 2);
  const std::vector<double>& q2 = sol.term(2);
  double scale = 0.0, worst = 0.0;
  for (int n = 0; n < sol.num_nodes(); n += std::max(1, sol.num_nodes() / 9)) {
    const double t = sol.node_time(n);
    const double x = sol.node_point(n)(0);
    const double ref = phi2_brute(t, x, 1.0, 0.7);
    scale = std::max(scale, std::abs(ref));
    worst = std::max(worst, std::abs(sol.unscale(n, q2[static_cast<std::size_t>(n)]) - ref));
  }
  EXPECT_LT(worst, 1e-2 * scale);
}

TEST(Levi, SeriesConvergesWithDiagnostics) {
  const Model m = kolmo::test::data_model("langevin_var.json");
  const LeviEvaluator ev(m.coeffs, *m.drift, m.quad);
  const auto sol = ev.solution(1.0, vec({0.3, 0.1}));
  const LeviDiagnostics& d = sol->diagnostics();
  EXPECT_LE(d.terms, 4);
  EXPECT_LT(d.tail, m.quad.series_tol);
  ASSERT_GE(d.term_norms.size(), 2u);
  for (std::size_t k = 1; k < d.term_norms.size(); ++k) EXPECT_LT(d.term_norms[k], d.term_norms[k - 1]);
  EXPECT_GT(d.kappa, 0.0);
  EXPECT_LT(d.probe_error, 10 * m.quad.quad_tol);
}

TEST(Levi, TightToleranceRaisesSeriesNotConverged) {
  Model m = kolmo::test::data_model("langevin_var.json");
  m.quad.series_tol = 1e-14;
  m.quad.max_terms = 2;
  EXPECT_THROW(LeviSolution(m.coeffs, *m.drift, m.quad, 1.0, vec({0.3, 0.1}), 0.0), SeriesNotConverged);
}

TEST(Levi, NystromExtensionAgreesWithInterpolant) {
  const Model m = kolmo::test::data_model("langevin_var.json");
  const LeviEvaluator ev(m.coeffs, *m.drift, m.quad);
  const auto sol = ev.solution(1.0, vec({0.3, 0.1}));
  double scale = 0.0;
  for (int n = 0; n < sol->num_nodes(); ++n) scale = std::max(scale, std::abs(sol->unscale(n, sol->phi_nodes()[n])));
  for (double t : {0.0, 0.4, 0.8}) {
    const Vec x = m.drift->exp(t - 1.0) * vec({0.3, 0.1}) + vec({0.2, -0.05});
    EXPECT_NEAR(sol->phi(t, x), sol->phi_interp(t, x), 2e-2 * scale);
  }
}

TEST(Levi, DerivativesMatchFiniteDifferences) {
  const Model m = kolmo::test::data_model("langevin_var.json");
  const LeviEvaluator ev(m.coeffs, *m.drift, m.quad);
  const Vec y = vec({0.3, 0.1});
  const Vec x = vec({0.1, -0.2});
  const double t = 0.3, h = 1e-4;
  const FieldEval e = ev.p(t, x, 1.0, y, kWantGrad | kWantHess);
  auto at = [&](double dx) { return ev.p(t, Vec(x + vec({dx, 0.0})), 1.0, y, kWantGrad).value; };
  const double fd1 = (at(h) - at(-h)) / (2 * h);
  const double fd2 = (at(h) - 2 * e.value + at(-h)) / (h * h);
  EXPECT_NEAR(e.grad(0), fd1, 1e-4 * (1 + std::abs(fd1)));
  EXPECT_NEAR(e.hess(0, 0), fd2, 1e-3 * (1 + std::abs(fd2)));
}

TEST(Levi, CollapsingCoefficientsSkipTheSeries) {
  const Model m = kolmo::test::data_model("langevin_step.json");
  const LeviEvaluator ev(m.coeffs, *m.drift, m.quad);
  EXPECT_TRUE(ev.collapses());
  EXPECT_LE(ev.tolerance(), 1e-6);
  const Vec x = vec({0.1, 0.0}), y = vec({0.2, 0.1});
  EXPECT_DOUBLE_EQ(ev.p(0.2, x, 1.0, y, kWantValue).value,
                   parametrix_eval(m.coeffs, *m.drift, 0.2, x, 1.0, y, kWantValue, m.quad.time_panels).value);
}

TEST(Levi, RejectsNegativeTime) {
  const Model m = kolmo::test::data_model("langevin_var.json");
  const LeviEvaluator ev(m.coeffs, *m.drift, m.quad);
  EXPECT_THROW(ev.p(-0.1, vec({0, 0}), 1.0, vec({0, 0}), kWantValue), ConfigError);
}
