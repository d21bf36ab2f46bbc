// Acceptance criteria 1-10: one PASS/FAIL line each, exit status 1 if any fails.
// Run a subset with: kolmo_acceptance 4 7

#include "kolmo/cauchy.hpp"
#include "kolmo/mc_oracle.hpp"
#include "kolmo/model.hpp"
#include "kolmo/parallel.hpp"
#include "kolmo/parametrix.hpp"
#include "kolmo/quadrature.hpp"
#include "kolmo/verify.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#ifndef KOLMO_CLI_PATH
#error "KOLMO_CLI_PATH must be defined"
#endif
#ifndef KOLMO_TEST_DATA
#error "KOLMO_TEST_DATA must be defined"
#endif

using namespace kolmo;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [FAILED]");
  }
};

std::string num(double v, int prec = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

Model model(const std::string& name) { return load_model(std::string(KOLMO_TEST_DATA) + "/" + name); }

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

Mat langevin_B() {
  Mat B = Mat::Zero(2, 2);
  B(1, 0) = 1.0;
  return B;
}

Mat chain3_B() {
  Mat B = Mat::Zero(3, 3);
  B(1, 0) = 1.0;
  B(2, 1) = 1.0;
  return B;
}

// ---------------------------------------------------------------------------------------------
Outcome criterion1() {
  Outcome o;
  const BlockStructure l = block_decompose(Eigen::MatrixXd(langevin_B()), 1);
  o.require(l.hoermander_ok && l.dims == std::vector<int>{1, 1} && l.Q == 4, "Langevin dims (1,1) Q=4");
  const BlockStructure c = block_decompose(Eigen::MatrixXd(chain3_B()), 1);
  o.require(c.hoermander_ok && c.dims == std::vector<int>{1, 1, 1} && c.Q == 9, "3-chain dims (1,1,1) Q=9");

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3.0, 3.0), lg(std::log(0.05), std::log(20.0));
  double worst = 0.0;
  for (const BlockStructure* s : {&l, &c}) {
    for (int k = 0; k < 10000; ++k) {
      Vec x(s->N);
      for (int i = 0; i < s->N; ++i) x(i) = u(rng);
      const double lam = std::exp(lg(rng));
      const double lhs = anisotropic_norm(Vec(dilation(lam, *s) * x), *s);
      const double rhs = lam * anisotropic_norm(x, *s);
      worst = std::max(worst, std::abs(lhs - rhs) / rhs);
    }
  }
  o.require(worst <= 1e-12, "norm homogeneity max rel err " + num(worst) + " <= 1e-12 (2x10^4 samples)");
  return o;
}

// ---------------------------------------------------------------------------------------------
Outcome criterion2() {
  Outcome o;
  const Drift lang(langevin_B(), 1);
  const Drift chain(chain3_B(), 1);
  Mat C1(2, 2);
  C1 << 1.0, 0.5, 0.5, 1.0 / 3.0;
  const double ce = (covariance_const(1.0, 1.0, lang) - C1).cwiseAbs().maxCoeff();
  o.require(ce <= 1e-12, "C(1) err " + num(ce) + " <= 1e-12");

  const double g = gamma_delta(1.0, 0.0, Vec::Zero(2), 1.0, Vec::Zero(2), lang);
  const double ge = std::abs(g - 0.5513288954);
  o.require(ge <= 1e-9, "Gamma^1(0,0;1,0) = " + num(g, 12) + " err " + num(ge) + " <= 1e-9");

  // Mass by a tensor trapezoid rule on the scaled variable (independent of the Gauss-Hermite code).
  double mass_err = 0.0;
  for (double delta : {0.5, 1.0, 2.0}) {
    for (double h : {0.1, 1.0}) {
      const Vec x = vec2(0.3, -0.4);
      const Vec m = lang.exp(h) * x;
      const Mat D = dilation(std::sqrt(h), lang.structure());
      const double step = 0.05;
      const int n = 480;
      std::vector<double> parts;
      for (int i = -n; i <= n; ++i)
        for (int j = -n; j <= n; ++j) {
          const Vec y = m + D * vec2(i * step, j * step);
          parts.push_back(gamma_delta(delta, 1.0 - h, x, 1.0, y, lang));
        }
      const double mass = pairwise_sum(parts) * step * step * D.determinant();
      mass_err = std::max(mass_err, std::abs(mass - 1.0));
    }
  }
  o.require(mass_err <= 1e-6, "mass of Gamma^delta err " + num(mass_err) + " <= 1e-6 (delta 0.5,1,2; h 0.1,1)");

  double hom = 0.0;
  for (const Drift* dr : {&lang, &chain}) {
    const Drift red = dr->reduced();
    const Mat C01 = covariance_const(1.0, 1.0, red);
    for (double t : {1e-3, 0.01, 0.1, 0.5, 2.0, 7.0}) {
      const Mat Ct = covariance_const(1.0, t, red);
      const Mat D = dilation(std::sqrt(t), red.structure());
      const Mat R = D * C01 * D;
      for (int i = 0; i < Ct.rows(); ++i)
        for (int j = 0; j < Ct.cols(); ++j) hom = std::max(hom, std::abs(Ct(i, j) - R(i, j)) / std::abs(R(i, j)));
    }
  }
  o.require(hom <= 1e-10, "C_0 homogeneity max rel err " + num(hom) + " <= 1e-10");

  const VerificationReport el = check_expm_block_orders(lang);
  const VerificationReport ec = check_expm_block_orders(chain);
  o.require(el.status == Status::Pass && ec.status == Status::Pass,
            "e^{tB} block orders (ratio spread " + num(el.get("worst_ratio_spread")) + ", " +
                num(ec.get("worst_ratio_spread")) + ")");
  return o;
}

// ---------------------------------------------------------------------------------------------
// Independent oracle: Langevin covariance for a(tau) = 1 + 0.5 step(tau - 0.5) by piecewise integration of
// int a(T - sigma) (1 sigma; sigma sigma^2) d sigma.
Mat step_covariance(double t, double T) {
  Mat C = Mat::Zero(2, 2);
  auto add = [&](double s0, double s1, double a) {
    if (s1 <= s0) return;
    C(0, 0) += a * (s1 - s0);
    C(0, 1) += a * (s1 * s1 - s0 * s0) / 2.0;
    C(1, 1) += a * (s1 * s1 * s1 - s0 * s0 * s0) / 3.0;
  };
  const double h = T - t;
  const double sj = T - 0.5;  // sigma where tau crosses 0.5
  if (sj <= 0.0) {
    add(0.0, h, 1.0);
  } else if (sj >= h) {
    add(0.0, h, 1.5);
  } else {
    add(0.0, sj, 1.5);
    add(sj, h, 1.0);
  }
  C(1, 0) = C(0, 1);
  return C;
}

double gauss2(const Mat& C, const Vec& z) {
  const double det = C(0, 0) * C(1, 1) - C(0, 1) * C(1, 0);
  const double q = (C(1, 1) * z(0) * z(0) - 2.0 * C(0, 1) * z(0) * z(1) + C(0, 0) * z(1) * z(1)) / det;
  return std::exp(-0.5 * q) / (2.0 * M_PI * std::sqrt(det));
}

Outcome criterion3() {
  Outcome o;
  double worst = 0.0;
  for (const char* f : {"langevin_const.json", "langevin_const2.json", "chain3.json"}) {
    const Model m = model(f);
    const LeviEvaluator ev(m.coeffs, *m.drift, m.quad);
    const double delta = m.coeffs.a2(0.0, Vec::Zero(m.N))(0, 0);
    const int N = m.N;
    const Vec y = Vec::Constant(N, 0.2);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (double t : {0.0, 0.5, 0.9, 0.99}) {
      for (int k = 0; k < 20; ++k) {
        Vec x(N);
        for (int i = 0; i < N; ++i) x(i) = u(rng);
        const double p = ev.p(t, x, 1.0, y, kWantValue).value;
        const double g = gamma_delta(delta, t, x, 1.0, y, *m.drift);
        worst = std::max(worst, std::abs(p - g) / g);
      }
    }
  }
  o.require(worst <= 1e-10, "constant coefficients |p - Gamma^delta|/Gamma max " + num(worst) + " <= 1e-10");

  const Model m = model("langevin_step.json");
  const LeviEvaluator ev(m.coeffs, *m.drift, m.quad);
  double phi1 = 0.0, pmax = 0.0, werr = 0.0;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  const Vec y = vec2(0.3, 0.1);
  for (double t : {0.0, 0.25, 0.49, 0.5, 0.51, 0.8}) {
    const double h = 1.0 - t;
    const Mat D = dilation(std::sqrt(h), m.drift->structure());
    for (int k = 0; k < 20; ++k) {
      const Vec z = vec2(2.0 * u(rng), 2.0 * u(rng));
      const Vec x = m.drift->exp(-h) * (y - D * z);
      const double p = ev.p(t, x, 1.0, y, kWantValue).value;
      const double ex = gauss2(step_covariance(t, 1.0), Vec(y - m.drift->exp(1.0 - t) * x));
      werr = std::max(werr, std::abs(p - ex) / ex);
      phi1 = std::max(phi1, std::abs(parametrix_mismatch(m.coeffs, *m.drift, t, x, 1.0, y)));
      pmax = std::max(pmax, p);
    }
  }
  o.require(ev.collapses(), "time-only coefficients detected");
  o.require(phi1 <= 1e-12 * pmax, "|phi_1| max " + num(phi1) + " (identically zero)");
  o.require(werr <= 1e-8, "time-only p vs piecewise covariance Gaussian max rel err " + num(werr) + " <= 1e-8");
  return o;
}

// ---------------------------------------------------------------------------------------------
Outcome criterion4() {
  Outcome o;
  const Model m = model("langevin_var.json");
  const LeviEvaluator ev(m.coeffs, *m.drift, m.quad);
  const double T = 1.0;
  const Vec y = vec2(0.3, 0.1);
  const LeviDiagnostics dg = ev.solution(T, y)->diagnostics();
  o.require(dg.terms <= 4 && dg.tail < 1e-4,
            "series terms " + std::to_string(dg.terms) + " <= 4, tail " + num(dg.tail) + " < 1e-4");

  struct Case {
    double t, s;
    Vec x;
  };
  const std::vector<Case> cases = {{0.0, 0.5, vec2(0.1, -0.2)}, {0.9, 0.95, vec2(0.25, 0.08)}};
  for (const Case& c : cases) {
    const std::string at = "T-t=" + num(T - c.t);
    const VerificationReport ck = check_chapman_kolmogorov(ev, c.t, c.x, c.s, T, y);
    o.require(ck.status == Status::Pass, "CK " + at + " rel err " + num(ck.get("relative_error")) + " <= 3 x " +
                                             num(ck.get("composed_tolerance")));
    const VerificationReport rs = check_residual(ev, c.t, c.x, c.s, T, y);
    o.require(rs.status == Status::Pass, "residual " + at + " " + num(rs.get("relative_residual")) + " <= 5 x " +
                                             num(rs.get("composed_tolerance")));
    const VerificationReport ms = check_mass(ev, 0.0, c.t, c.x, T, 8, 1e-3);
    o.require(ms.status == Status::Pass, "mass " + at + " " + num(ms.get("mass"), 8) + " within 1e-3");
  }
  return o;
}

// ---------------------------------------------------------------------------------------------
Outcome criterion5() {
  Outcome o;
  BoundsGrid g;
  g.T = 1.0;
  g.y = vec2(0.3, 0.1);
  g.horizons = {1.0 / 16, 1.0 / 8, 1.0 / 4, 1.0 / 2, 1.0};
  {
    const Model m = model("langevin_const.json");
    const LeviEvaluator ev(m.coeffs, *m.drift, m.quad);
    const VerificationReport r = check_gaussian_bounds(ev, g, m.quad.eps_factor * m.mu, 0.1);
    o.require(r.status == Status::Pass, "kernel slopes " + num(r.get("slope_value")) + ", " +
                                            num(r.get("slope_grad")) + ", " + num(r.get("slope_hess")) +
                                            " (tol 0.1), c_bar " + num(r.get("c_bar")));
  }
  {
    const Model m = model("langevin_var.json");
    const LeviEvaluator ev(m.coeffs, *m.drift, m.quad);
    const VerificationReport r = check_gaussian_bounds(ev, g, m.quad.eps_factor * m.mu, 0.3);
    o.require(r.status == Status::Pass, "Levi slopes " + num(r.get("slope_value")) + ", " +
                                            num(r.get("slope_grad")) + ", " + num(r.get("slope_hess")) +
                                            " (tol 0.3), c_bar " + num(r.get("c_bar")) + " at mu_bar " +
                                            num(r.get("mu_bar")));
  }
  return o;
}

// ---------------------------------------------------------------------------------------------
double blowup_slope(const LeviEvaluator& ev, double T, const Vec& y, const std::vector<double>& hs, int samples,
                    std::vector<double>& values) {
  const ScalarFn Ap = generator_applied(ev, T, y);
  const ScalarFn fY = [&](double t, const Vec& x) { return -Ap(t, x); };
  const JetFn f = [&](double t, const Vec& x, int want) { return ev.p(t, x, T, y, want); };
  values.clear();
  for (double h : hs) {
    HolderDomain dom;
    dom.t0 = T - 1.5 * h;
    dom.t1 = T - h;
    dom.center = y;
    dom.follow_flow = true;
    dom.T_flow = T;
    dom.scale = std::sqrt(h);
    dom.max_dt = 0.5 * h;
    values.push_back(holder_seminorm(f, HolderKind::CB2, ev.drift(), 0.5, samples, 11, dom, fY).value);
  }
  return loglog_slope(hs, values);
}

Outcome criterion6() {
  Outcome o;
  const std::vector<double> hs = {0.4, 0.2, 0.1, 0.05, 0.025};
  const double expected = -(4.0 + 2.0 + 0.5) / 2.0;
  std::vector<double> v;
  for (const char* f : {"langevin_const.json", "langevin_var.json"}) {
    const Model m = model(f);
    const LeviEvaluator ev(m.coeffs, *m.drift, m.quad);
    const double sl = blowup_slope(ev, 1.0, vec2(0.3, 0.1), hs, 300, v);
    o.require(std::abs(sl - expected) <= 0.3,
              std::string(f) + " C_B^{2,0.5} slope " + num(sl, 4) + " vs " + num(expected, 4) + " +- 0.3");
  }
  return o;
}

// ---------------------------------------------------------------------------------------------
Outcome criterion7() {
  Outcome o;
  {
    const Model m = model("langevin_const.json");
    const LeviEvaluator ev(m.coeffs, *m.drift, m.quad);
    McConfig cfg;
    cfg.paths = 1000000;
    cfg.steps = 200;
    cfg.seed = 1;
    const Vec x = vec2(0.2, -0.1);
    const McResult mc = mc_simulate(m.coeffs, *m.drift, 0.0, x, 1.0, cfg);
    const McComparison cmp = mc_compare(mc, bin_mass_quadrature(ev, 0.0, x, 1.0), 1.0);
    o.require(cmp.l1 <= 0.02, "constant L1 " + num(cmp.l1) + " <= 0.02 (1e6 paths, 200 steps)");
    const Vec mean = m.drift->exp(1.0) * x;
    const Mat C = covariance_const(1.0, 1.0, *m.drift);
    double zm = 0.0, zc = 0.0;
    for (int i = 0; i < 2; ++i) {
      zm = std::max(zm, std::abs(mc.mean(i) - mean(i)) / mc.mean_se(i));
      for (int j = 0; j < 2; ++j) zc = std::max(zc, std::abs(mc.cov(i, j) - C(i, j)) / mc.cov_se(i, j));
    }
    o.require(zm <= 3.0 && zc <= 3.0, "mean within " + num(zm) + " se, covariance within " + num(zc) + " se (<= 3)");
  }
  {
    const Model m = model("langevin_var.json");
    const LeviEvaluator ev(m.coeffs, *m.drift, m.quad);
    McConfig cfg;
    cfg.paths = 500000;
    cfg.steps = 200;
    cfg.seed = 2;
    const Vec x = vec2(0.1, -0.2);
    const McResult mc = mc_simulate(m.coeffs, *m.drift, 0.0, x, 1.0, cfg);
    const McComparison cmp = mc_compare(mc, bin_mass_levi(ev, 0.0, x, 1.0), 1.0);
    o.require(cmp.l1 <= 0.05, "variable-coefficient L1 " + num(cmp.l1) + " <= 0.05 (5e5 paths, 200 steps)");
  }
  return o;
}

// ---------------------------------------------------------------------------------------------
Outcome criterion8() {
  Outcome o;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  double e1 = 0.0, el = 0.0;
  for (const char* f : {"langevin_const.json", "langevin_step.json"}) {
    const Model m = model(f);
    const LeviEvaluator ev(m.coeffs, *m.drift, m.quad);
    CauchyProblem one;
    one.g = Expr::parse("1", 2);
    CauchyProblem lin;
    lin.g = Expr::parse("0.7*x1 - 0.3*x2", 2);
    lin.growth_C = 0.1;
    const CauchySolver s1(ev, one), sl(ev, lin);
    for (double t : {0.0, 0.3, 0.6, 0.95}) {
      for (int k = 0; k < 5; ++k) {
        const Vec x = vec2(u(rng), u(rng));
        e1 = std::max(e1, std::abs(s1.solve(t, x) - 1.0));
        const Vec ex = m.drift->exp(1.0 - t) * x;
        el = std::max(el, std::abs(sl.solve(t, x) - (0.7 * ex(0) - 0.3 * ex(1))));
      }
    }
  }
  o.require(e1 <= 1e-6, "g=1: max |u-1| " + num(e1) + " <= 1e-6");
  o.require(el <= 1e-6, "g linear: max err " + num(el) + " <= 1e-6");

  const Model ma = model("langevin_abar.json");
  const LeviEvaluator eva(ma.coeffs, *ma.drift, ma.quad);
  const VerificationReport mass = check_mass(eva, 0.5, 0.0, vec2(0.1, -0.2), 1.0, 8, 1e-4);
  o.require(mass.status == Status::Pass,
            "abar=0.5 mass " + num(mass.get("mass"), 9) + " vs e^0.5, rel err " + num(mass.get("relative_error")) +
                " <= 1e-4");

  const Model ms = model("langevin_step.json");
  const LeviEvaluator evs(ms.coeffs, *ms.drift, ms.quad);
  CauchyProblem cp;
  cp.g = Expr::parse("exp(-x1^2)*cos(x2) + 0.5*abs(x1)", 2);
  cp.growth_C = 1.0;
  const CauchySolver sc(evs, cp);
  const ContinuityResult cr = terminal_continuity_check(sc, cp, vec2(0.3, 0.1), {0.1, 0.05, 0.025, 0.0125, 0.00625});
  o.require(cr.monotone, "terminal continuity deviations decreasing, last " + num(cr.deviations.back()) +
                             ", slope " + num(cr.slope));
  return o;
}

// ---------------------------------------------------------------------------------------------
std::string random_expr(std::mt19937_64& rng, int depth, int N) {
  std::uniform_int_distribution<int> pick(0, 99);
  const int r = pick(rng);
  if (depth <= 0 || r < 25) {
    const int leaf = pick(rng) % 3;
    if (leaf == 0) return "t";
    if (leaf == 1) return "x" + std::to_string(1 + pick(rng) % N);
    std::uniform_real_distribution<double> c(0.0, 5.0);
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", c(rng));
    return buf;
  }
  const std::string a = random_expr(rng, depth - 1, N), b = random_expr(rng, depth - 1, N);
  static const char* unary[] = {"sin", "cos", "exp", "abs", "tanh", "step"};
  static const char* binary[] = {"min", "max", "powb"};
  static const char* ops[] = {"+", "-", "*", "/", "^"};
  if (r < 45) return std::string(unary[pick(rng) % 6]) + "(" + a + ")";
  if (r < 55) return std::string(binary[pick(rng) % 3]) + "(" + a + ", " + b + ")";
  if (r < 62) return "-" + a;
  if (r < 70) return "(" + a + ")";
  return a + " " + ops[pick(rng) % 5] + " " + b;
}

Outcome criterion9() {
  Outcome o;
  std::mt19937_64 rng(42);
  int ok = 0, total = 1000;
  for (int k = 0; k < total; ++k) {
    const std::string src = random_expr(rng, 5, 3);
    const Expr e = Expr::parse(src, 3);
    const Expr e2 = Expr::parse(e.to_string(), 3);
    if (e.ast() == e2.ast() && e2.to_string() == e.to_string()) ++ok;
  }
  o.require(ok == total, "round trip " + std::to_string(ok) + "/" + std::to_string(total));

  const Model m = model("langevin_step.json");
  const FrozenCovariance fc = covariance_frozen(m.coeffs, *m.drift, 1.0, vec2(0.3, 0.1), 0.0, 1.0);
  const double err = std::abs(fc.C(0, 0) - 1.25);
  o.require(err <= 1e-10, "step covariance C_11 = " + num(fc.C(0, 0), 15) + " err " + num(err) + " <= 1e-10");
  return o;
}

// ---------------------------------------------------------------------------------------------
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Outcome criterion10() {
  Outcome o;
  const std::string data = KOLMO_TEST_DATA;
  struct Run {
    std::string name, args;
  };
  const std::vector<Run> runs = {
      {"analyze", "--model " + data + "/langevin_const.json analyze"},
      {"eval-kernel", "--model " + data + "/langevin_var.json eval-kernel --kind parametrix --grid 0:0.9:4,-1:1:5,-1:1:5 --T 1 --y 0.3,0.1"},
      {"build-density", "--model " + data + "/langevin_var.json build-density --grid 0:0.8:3,-1:1:4,-1:1:4 --T 1 --y 0.3,0.1"},
      {"solve-cauchy", "--model " + data + "/langevin_step.json solve-cauchy --g 'cos(x1)+x2' --growth-C 0.1 --grid 0:0.9:3,-1:1:4,-1:1:4 --T 1"},
      {"verify", "--model " + data + "/langevin_var.json verify --checks expm_blocks,ellipticity,gaussian_bounds,residual,holder --T 1 --y 0.3,0.1 --seed 3"},
      {"mc-oracle", "--model " + data + "/langevin_const.json mc-oracle --paths 40000 --steps 50 --seed 5 --T 1"},
  };
  const fs::path root = fs::temp_directory_path() / ("kolmo_det_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  int identical = 0;
  for (const Run& r : runs) {
    std::string out[2];
    bool ran = true;
    for (int k = 0; k < 2; ++k) {
      const int threads = k == 0 ? 1 : 4;
      const fs::path dir = root / (r.name + "_" + std::to_string(threads));
      const std::string cmd = std::string(KOLMO_CLI_PATH) + " --threads " + std::to_string(threads) + " --out " +
                              dir.string() + " " + r.args + " > " + dir.string() + ".stdout 2>&1";
      const int rc = std::system(cmd.c_str());
      if (rc != 0) ran = false;
      std::vector<fs::path> files;
      if (fs::exists(dir))
        for (const auto& e : fs::directory_iterator(dir)) files.push_back(e.path());
      std::sort(files.begin(), files.end());
      for (const auto& f : files) out[k] += f.filename().string() + "\n" + slurp(f);
      out[k] += slurp(dir.string() + ".stdout");
    }
    const bool same = ran && !out[0].empty() && out[0] == out[1];
    if (same) ++identical;
    else o.require(false, r.name + (ran ? " differs" : " did not exit 0"));
  }
  fs::remove_all(root);
  o.require(identical == static_cast<int>(runs.size()),
            std::to_string(identical) + "/" + std::to_string(runs.size()) +
                " subcommands byte-identical at --threads 1 and 4");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"structure", criterion1},     {"kernel", criterion2},      {"collapse", criterion3},
      {"levi", criterion4},          {"gaussian bounds", criterion5}, {"regularity blow-up", criterion6},
      {"mc oracle", criterion7},     {"cauchy", criterion8},      {"parser", criterion9},
      {"determinism", criterion10}};
  const double budget[] = {1, 10, 30, 600, 600, 600, 300, 120, 5, 1e9};
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  if (const char* th = std::getenv("KOLMO_THREADS")) set_threads(std::max(1, std::atoi(th)));
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (sec > budget[i]) o.require(false, "runtime " + num(sec) + " s exceeds " + num(budget[i]) + " s");
    all = all && o.pass;
    std::printf("criterion %2d %-18s %s  (%.1f s)  %s\n", id, criteria[i].first, o.pass ? "PASS" : "FAIL", sec,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
