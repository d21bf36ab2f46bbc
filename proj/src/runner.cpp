#include "kolmo/runner.hpp"

#include "kolmo/cauchy.hpp"
#include "kolmo/mc_oracle.hpp"
#include "kolmo/parallel.hpp"
#include "kolmo/verify.hpp"

#include "json.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace kolmo {

using json = nlohmann::ordered_json;

std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

[[noreturn]] void bad(const std::string& msg) { throw ConfigError(msg); }

double parse_double(const std::string& s, const std::string& what) {
  const char* b = s.data();
  const char* e = b + s.size();
  while (b < e && *b == ' ') ++b;
  while (e > b && e[-1] == ' ') --e;
  double v = 0.0;
  const auto r = std::from_chars(b, e, v);
  if (r.ec != std::errc() || r.ptr != e || !std::isfinite(v)) bad("invalid number '" + s + "' in " + what);
  return v;
}

std::vector<double> parse_range(const std::string& spec, const std::string& what) {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : spec) {
    if (ch == ':') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  parts.push_back(cur);
  if (parts.size() == 1) return {parse_double(parts[0], what)};
  if (parts.size() != 3) bad("grid spec '" + spec + "' must be 'a:b:n' or a single value");
  const double a = parse_double(parts[0], what), b = parse_double(parts[1], what);
  const double nd = parse_double(parts[2], what);
  if (nd < 1 || nd != std::floor(nd) || nd > 1e6) bad("grid spec '" + spec + "': n must be a positive integer");
  const int n = static_cast<int>(nd);
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(n == 1 ? a : a + (b - a) * i / (n - 1));
  return out;
}

class Request {
 public:
  Request(const std::string& text, std::set<std::string> allowed) {
    if (text.empty()) {
      j_ = json::object();
    } else {
      try {
        j_ = json::parse(text);
      } catch (const json::parse_error& e) {
        bad(std::string("invalid request JSON: ") + e.what());
      }
    }
    if (!j_.is_object()) bad("request must be a JSON object");
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!allowed.count(it.key())) bad("unknown option '" + it.key() + "'");
  }
  bool has(const char* k) const { return j_.contains(k) && !j_[k].is_null(); }
  double num(const char* k, double fallback) const {
    if (!has(k)) return fallback;
    if (!j_[k].is_number()) bad(std::string("option '") + k + "' must be a number");
    const double v = j_[k].get<double>();
    if (!std::isfinite(v)) bad(std::string("option '") + k + "' must be finite");
    return v;
  }
  long integer(const char* k, long fallback) const {
    if (!has(k)) return fallback;
    if (!j_[k].is_number_integer()) bad(std::string("option '") + k + "' must be an integer");
    return j_[k].get<long>();
  }
  std::uint64_t seed(const char* k, std::uint64_t fallback) const {
    if (!has(k)) return fallback;
    if (!j_[k].is_number_unsigned() && !(j_[k].is_number_integer() && j_[k].get<long long>() >= 0))
      bad(std::string("option '") + k + "' must be a non-negative integer");
    return j_[k].get<std::uint64_t>();
  }
  std::string str(const char* k, const std::string& fallback) const {
    if (!has(k)) return fallback;
    if (!j_[k].is_string()) bad(std::string("option '") + k + "' must be a string");
    return j_[k].get<std::string>();
  }
  bool flag(const char* k, bool fallback) const {
    if (!has(k)) return fallback;
    if (!j_[k].is_boolean()) bad(std::string("option '") + k + "' must be a boolean");
    return j_[k].get<bool>();
  }
  Vec vec(const char* k, int N, const Vec& fallback) const {
    if (!has(k)) return fallback;
    const json& v = j_[k];
    if (!v.is_array() || static_cast<int>(v.size()) != N) bad(std::string("option '") + k + "' must have N entries");
    Vec out(N);
    for (int i = 0; i < N; ++i) {
      if (!v[static_cast<std::size_t>(i)].is_number()) bad(std::string("option '") + k + "' entries must be numbers");
      out(i) = v[static_cast<std::size_t>(i)].get<double>();
    }
    return out;
  }
  std::vector<double> list(const char* k, std::vector<double> fallback) const {
    if (!has(k)) return fallback;
    const json& v = j_[k];
    if (!v.is_array()) bad(std::string("option '") + k + "' must be an array");
    std::vector<double> out;
    for (const json& e : v) {
      if (!e.is_number()) bad(std::string("option '") + k + "' entries must be numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }
  std::vector<std::string> strings(const char* k, std::vector<std::string> fallback) const {
    if (!has(k)) return fallback;
    const json& v = j_[k];
    if (!v.is_array()) bad(std::string("option '") + k + "' must be an array");
    std::vector<std::string> out;
    for (const json& e : v) {
      if (!e.is_string()) bad(std::string("option '") + k + "' entries must be strings");
      out.push_back(e.get<std::string>());
    }
    return out;
  }

 private:
  json j_;
};

std::string json_vec(const Vec& v) {
  std::string s = "[";
  for (int i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt_num(v(i));
  return s + "]";
}

std::string json_mat(const Mat& m) {
  std::string s = "[";
  for (int i = 0; i < m.rows(); ++i) {
    s += i ? ", [" : "[";
    for (int j = 0; j < m.cols(); ++j) s += (j ? ", " : "") + fmt_num(m(i, j));
    s += "]";
  }
  return s + "]";
}

std::string csv_header_point(int N, const char* xname) {
  std::string h = "t";
  for (int i = 1; i <= N; ++i) h += std::string(",") + xname + "_" + std::to_string(i);
  return h;
}

std::string target_header(int N) {
  std::string h = ",T";
  for (int i = 1; i <= N; ++i) h += ",y_" + std::to_string(i);
  return h;
}

std::string row_prefix(double t, const Vec& x) {
  std::string r = fmt_num(t);
  for (int i = 0; i < x.size(); ++i) r += "," + fmt_num(x(i));
  return r;
}

struct GridJob {
  double t;
  Vec x;
};

std::vector<GridJob> grid_jobs(const Request& rq, int N) {
  if (!rq.has("grid")) bad("option 'grid' is required");
  const Grid g = parse_grid(rq.str("grid", ""), N);
  std::vector<GridJob> jobs;
  const auto pts = g.points();
  for (double t : g.t)
    for (const Vec& x : pts) jobs.push_back({t, x});
  return jobs;
}

double target_T(const Request& rq, const Model& m) { return rq.num("T", m.T_bar); }

RunOutput cmd_analyze(const Model& m, const std::string& request) {
  Request rq(request, {"tol", "seed"});
  RunOutput out;
  const double tol = rq.num("tol", kDefaultRankTol);
  if (!(tol > 0.0 && tol < 1.0)) bad("rank tolerance must be in (0, 1)");
  const BlockStructure s = rq.has("tol") ? block_decompose(Eigen::MatrixXd(m.B), m.d, tol) : m.structure;
  const std::string js = structure_json(s, m.N, m.d);
  out.stdout_text = js + "\n";
  out.files.emplace_back("structure.json", js + "\n");
  return out;
}

RunOutput cmd_eval_kernel(const Model& m, const std::string& request) {
  Request rq(request, {"grid", "T", "y", "kind", "delta", "seed", "tol"});
  const Drift& drift = m.require_drift();
  const int N = m.N;
  const auto jobs = grid_jobs(rq, N);
  const double T = target_T(rq, m);
  const Vec y = rq.vec("y", N, Vec::Zero(N));
  const std::string kind = rq.str("kind", "gamma");
  const double delta = rq.num("delta", 1.0);
  if (kind != "gamma" && kind != "parametrix") bad("option 'kind' must be 'gamma' or 'parametrix'");
  if (!(delta > 0.0)) bad("option 'delta' must be positive");
  std::vector<std::string> rows(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t i) {
    const GridJob& jb = jobs[i];
    if (!(T - jb.t >= m.quad.min_dt)) bad("grid time " + fmt_num(jb.t) + " is not below T - min_dt");
    const double v = kind == "gamma"
                         ? gamma_delta(delta, jb.t, jb.x, T, y, drift, m.quad.min_dt)
                         : parametrix_eval(m.coeffs, drift, jb.t, jb.x, T, y, kWantValue, m.quad.time_panels, m.quad.min_dt).value;
    rows[i] = row_prefix(jb.t, jb.x) + "," + row_prefix(T, y).substr(0) + "," + fmt_num(v) + "\n";
  });
  std::string csv = csv_header_point(N, "x") + target_header(N) + ",p\n";
  for (const auto& r : rows) csv += r;
  RunOutput out;
  out.files.emplace_back("kernel.csv", csv);
  return out;
}

std::string diagnostics_json(const LeviDiagnostics& d, double T, const Vec& y, long negatives, long points,
                             bool collapsed) {
  std::ostringstream os;
  os << "{\n";
  os << "  \"T\": " << fmt_num(T) << ",\n";
  os << "  \"y\": " << json_vec(y) << ",\n";
  os << "  \"collapsed_to_parametrix\": " << (collapsed ? "true" : "false") << ",\n";
  os << "  \"terms\": " << d.terms << ",\n";
  os << "  \"tail\": " << fmt_num(d.tail) << ",\n";
  os << "  \"last_ratio\": " << fmt_num(d.last_ratio) << ",\n";
  os << "  \"kappa\": " << fmt_num(d.kappa) << ",\n";
  os << "  \"analytic_tail\": " << fmt_num(d.analytic_tail) << ",\n";
  os << "  \"probe_error\": " << fmt_num(d.probe_error) << ",\n";
  os << "  \"nodes\": " << d.nodes << ",\n";
  os << "  \"term_norms\": [";
  for (std::size_t i = 0; i < d.term_norms.size(); ++i) os << (i ? ", " : "") << fmt_num(d.term_norms[i]);
  os << "],\n";
  os << "  \"negative_points\": " << negatives << ",\n";
  os << "  \"points\": " << points << "\n";
  os << "}\n";
  return os.str();
}

RunOutput cmd_build_density(const Model& m, const std::string& request) {
  Request rq(request, {"grid", "T", "y", "derivs", "seed", "tol"});
  const Drift& drift = m.require_drift();
  const int N = m.N, d = m.d;
  const auto jobs = grid_jobs(rq, N);
  const double T = target_T(rq, m);
  const Vec y = rq.vec("y", N, Vec::Zero(N));
  const bool derivs = rq.flag("derivs", true);
  for (const GridJob& jb : jobs)
    if (!(jb.t >= 0.0 && T - jb.t >= m.quad.min_dt)) bad("grid time " + fmt_num(jb.t) + " must lie in [0, T - min_dt]");
  const LeviEvaluator ev(m.coeffs, drift, m.quad);
  LeviDiagnostics diag;
  if (!ev.collapses()) diag = ev.solution(T, y)->diagnostics();
  else diag.terms = 1, diag.trivial = true;
  const int want = derivs ? (kWantGrad | kWantHess) : kWantValue;
  std::vector<std::string> rows(jobs.size());
  std::vector<char> neg(jobs.size(), 0);
  parallel_for(jobs.size(), [&](std::size_t i) {
    const GridJob& jb = jobs[i];
    const FieldEval e = ev.p(jb.t, jb.x, T, y, want);
    std::string r = row_prefix(jb.t, jb.x) + "," + row_prefix(T, y) + "," + fmt_num(e.value);
    if (derivs) {
      for (int a = 0; a < d; ++a) r += "," + fmt_num(e.grad(a));
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) r += "," + fmt_num(e.hess(a, b));
    }
    rows[i] = r + "\n";
    neg[i] = e.negative_flag ? 1 : 0;
  });
  std::string csv = csv_header_point(N, "x") + target_header(N) + ",p";
  if (derivs) {
    for (int a = 1; a <= d; ++a) csv += ",grad_" + std::to_string(a);
    for (int a = 1; a <= d; ++a)
      for (int b = 1; b <= d; ++b) csv += ",hess_" + std::to_string(a) + std::to_string(b);
  }
  csv += "\n";
  for (const auto& r : rows) csv += r;
  long negatives = 0;
  for (char c : neg) negatives += c;
  RunOutput out;
  out.files.emplace_back("density.csv", csv);
  out.files.emplace_back("diagnostics.json",
                         diagnostics_json(diag, T, y, negatives, static_cast<long>(jobs.size()), ev.collapses()));
  return out;
}

RunOutput cmd_solve_cauchy(const Model& m, const std::string& request) {
  Request rq(request, {"grid", "T", "g", "f", "growth_C", "gh_order", "time_nodes", "seed", "tol"});
  const Drift& drift = m.require_drift();
  const int N = m.N;
  const auto jobs = grid_jobs(rq, N);
  CauchyProblem cp;
  cp.T = target_T(rq, m);
  if (!rq.has("g")) bad("option 'g' is required");
  try {
    cp.g = Expr::parse(rq.str("g", "0"), N);
    cp.f = Expr::parse(rq.str("f", "0"), N);
  } catch (const ParseError& e) {
    bad(std::string("terminal/source expression: ") + e.what());
  }
  cp.growth_C = rq.num("growth_C", m.growth_C);
  CauchyConfig cfg;
  cfg.gh_order = static_cast<int>(rq.integer("gh_order", cfg.gh_order));
  cfg.time_nodes = static_cast<int>(rq.integer("time_nodes", cfg.time_nodes));
  cfg.eps_factor = m.quad.eps_factor;
  const LeviEvaluator ev(m.coeffs, drift, m.quad);
  const CauchySolver solver(ev, cp, cfg);
  for (const GridJob& jb : jobs) {
    if (!(jb.t >= 0.0 && jb.t < cp.T)) bad("grid time " + fmt_num(jb.t) + " must lie in [0, T)");
    solver.check_growth(cp.T - jb.t);
  }
  std::vector<std::string> rows(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t i) {
    rows[i] = row_prefix(jobs[i].t, jobs[i].x) + "," + fmt_num(solver.solve(jobs[i].t, jobs[i].x)) + "\n";
  });
  std::string csv = csv_header_point(N, "x") + ",u\n";
  for (const auto& r : rows) csv += r;
  RunOutput out;
  out.files.emplace_back("cauchy.csv", csv);
  return out;
}

RunOutput cmd_verify(const Model& m, const std::string& request) {
  Request rq(request, {"checks", "t", "s", "T", "x", "y", "abar", "gh_order", "tol", "seed", "samples", "points",
                       "horizons", "kind", "exponent", "steps", "slope_tol", "grid"});
  const Drift& drift = m.require_drift();
  const int N = m.N;
  const std::vector<std::string> checks =
      rq.strings("checks", {"expm_blocks", "ellipticity", "mass", "chapman_kolmogorov"});
  const double T = target_T(rq, m);
  const double t = rq.num("t", 0.0);
  const double s = rq.num("s", 0.5 * (t + T));
  const Vec x = rq.vec("x", N, Vec::Zero(N));
  const Vec y = rq.vec("y", N, Vec::Zero(N));
  const std::uint64_t seed = rq.seed("seed", 1);
  if (!(t >= 0.0 && t < T)) bad("verify: need 0 <= t < T");
  const LeviEvaluator ev(m.coeffs, drift, m.quad);
  std::vector<VerificationReport> reports;
  for (const std::string& name : checks) {
    if (name == "expm_blocks") {
      reports.push_back(check_expm_block_orders(drift));
    } else if (name == "ellipticity") {
      const int samples = static_cast<int>(rq.integer("samples", 2000));
      const EllipticityResult e = validate_ellipticity(m.coeffs, samples, seed);
      VerificationReport r;
      r.check_name = "ellipticity";
      r.set("observed_mu", e.observed_mu);
      r.set("mu", m.mu);
      r.tolerance = m.mu;
      r.samples = e.samples;
      r.status = e.ok && e.observed_mu <= m.mu ? Status::Pass : Status::Fail;
      r.notes = "Halton samples of (t, x) in [0, T_bar] x [-5, 5]^N";
      reports.push_back(r);
    } else if (name == "mass") {
      double abar = 0.0;
      if (rq.has("abar")) {
        abar = rq.num("abar", 0.0);
      } else if (m.coeffs.a0_constant()) {
        abar = m.coeffs.a0_constant_value();
      } else {
        bad("verify mass: zeroth-order coefficient is not constant; pass 'abar'");
      }
      reports.push_back(check_mass(ev, abar, t, x, T, static_cast<int>(rq.integer("gh_order", 8)), rq.num("tol", 1e-4)));
    } else if (name == "chapman_kolmogorov") {
      reports.push_back(check_chapman_kolmogorov(ev, t, x, s, T, y, static_cast<int>(rq.integer("gh_order", 7))));
    } else if (name == "gaussian_bounds") {
      BoundsGrid g;
      g.T = T;
      g.y = y;
      g.horizons = rq.list("horizons", {T / 16, T / 8, T / 4, T / 2, T});
      g.points = static_cast<int>(rq.integer("points", 48));
      g.seed = seed;
      const double slope_tol = rq.num("slope_tol", ev.collapses() ? 0.1 : 0.3);
      reports.push_back(check_gaussian_bounds(ev, g, m.quad.eps_factor * m.mu, slope_tol));
    } else if (name == "residual") {
      reports.push_back(check_residual(ev, t, x, s, T, y, static_cast<int>(rq.integer("steps", 64))));
    } else if (name == "holder") {
      const HolderKind kind = parse_holder_kind(rq.str("kind", "C_d"));
      const double expo = rq.num("exponent", 0.5);
      const int samples = static_cast<int>(rq.integer("samples", 200));
      HolderDomain dom;
      dom.t0 = t;
      dom.t1 = s;
      dom.center = y;
      dom.follow_flow = true;
      dom.T_flow = T;
      dom.scale = std::sqrt(T - s);
      dom.max_dt = 0.5 * (T - s);
      const JetFn f = [&](double tt, const Vec& xx, int want) { return ev.p(tt, xx, T, y, want); };
      const ScalarFn Ap = generator_applied(ev, T, y);
      const ScalarFn fY = [&](double tt, const Vec& xx) { return -Ap(tt, xx); };
      const HolderEstimate half = holder_seminorm(f, kind, drift, expo, std::max(1, samples / 2), seed, dom, fY);
      const HolderEstimate full = holder_seminorm(f, kind, drift, expo, samples, seed, dom, fY);
      VerificationReport r;
      r.check_name = std::string("holder_") + holder_kind_name(kind);
      r.set("value", full.value);
      r.set("value_half_samples", half.value);
      r.set("exponent", expo);
      r.tolerance = 0.0;
      r.samples = full.pairs_used;
      r.status = std::isfinite(full.value) && full.value >= half.value ? Status::Pass : Status::Fail;
      r.notes = "sample-sup on t in [t, s], dilation-scaled neighbourhood of the backward flow of y; lower bound of the semi-norm";
      reports.push_back(r);
    } else {
      bad("unknown check '" + name +
          "' (expected expm_blocks, ellipticity, mass, chapman_kolmogorov, gaussian_bounds, residual, holder)");
    }
  }
  RunOutput out;
  for (const auto& r : reports)
    if (r.status == Status::Fail) out.verification_failed = true;
  out.files.emplace_back("report.json", reports_json(reports));
  out.files.emplace_back("tables.csv", reports_table_csv(reports));
  return out;
}

RunOutput cmd_mc_oracle(const Model& m, const std::string& request) {
  Request rq(request, {"t", "x", "T", "paths", "steps", "seed", "bins", "compare", "sub", "phi_threshold", "tol"});
  const Drift& drift = m.require_drift();
  const int N = m.N;
  const double T = target_T(rq, m);
  const double t = rq.num("t", 0.0);
  const Vec x = rq.vec("x", N, Vec::Zero(N));
  McConfig cfg;
  cfg.paths = rq.integer("paths", 100000);
  cfg.steps = static_cast<int>(rq.integer("steps", 200));
  cfg.seed = rq.seed("seed", 1);
  cfg.bins = static_cast<int>(rq.integer("bins", 30));
  const bool compare = rq.flag("compare", true);
  const McResult mc = mc_simulate(m.coeffs, drift, t, x, T, cfg);
  McComparison cmp;
  const LeviEvaluator ev(m.coeffs, drift, m.quad);
  if (compare) {
    const int sub = static_cast<int>(rq.integer("sub", 3));
    const BinMassFn bm = ev.collapses() ? bin_mass_quadrature(ev, t, x, T, sub)
                                        : bin_mass_levi(ev, t, x, T, sub, rq.num("phi_threshold", 1e-4));
    cmp = mc_compare(mc, bm, mc.weight);
  }
  std::string csv = "";
  for (int i = 1; i <= N; ++i) csv += (i > 1 ? ",y_" : "y_") + std::to_string(i);
  csv += compare ? ",mc_mass,p_mass\n" : ",mc_mass\n";
  for (std::size_t b = 0; b < mc.mass.size(); ++b) {
    const Vec c = mc_bin_center(mc, b);
    std::string r;
    for (int i = 0; i < N; ++i) r += (i ? "," : "") + fmt_num(c(i));
    r += "," + fmt_num(mc.mass[b]);
    if (compare) r += "," + fmt_num(cmp.p_mass[b]);
    csv += r + "\n";
  }
  const double h = T - t;
  std::ostringstream js;
  js << "{\n";
  js << "  \"paths\": " << mc.paths << ",\n";
  js << "  \"steps\": " << mc.steps << ",\n";
  js << "  \"seed\": " << cfg.seed << ",\n";
  js << "  \"bins_per_dim\": " << mc.bins << ",\n";
  js << "  \"mean\": " << json_vec(mc.mean) << ",\n";
  js << "  \"mean_se\": " << json_vec(mc.mean_se) << ",\n";
  js << "  \"expected_mean\": " << json_vec(Vec(drift.exp(h) * x)) << ",\n";
  js << "  \"cov\": " << json_mat(mc.cov) << ",\n";
  js << "  \"cov_se\": " << json_mat(mc.cov_se) << ",\n";
  js << "  \"outside_mass\": " << fmt_num(mc.outside) << ",\n";
  if (compare) {
    js << "  \"l1_distance\": " << fmt_num(cmp.l1) << ",\n";
    js << "  \"reference_mass_in_box\": " << fmt_num(cmp.p_inside) << ",\n";
  }
  js << "  \"weight\": " << fmt_num(mc.weight) << "\n";
  js << "}\n";
  RunOutput out;
  if (compare) out.stdout_text = "l1_distance " + fmt_num(cmp.l1) + "\n";
  out.files.emplace_back("histogram.csv", csv);
  out.files.emplace_back("mc_summary.json", js.str());
  return out;
}

}  // namespace

Grid parse_grid(const std::string& spec, int N) {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : spec) {
    if (ch == ',') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  parts.push_back(cur);
  if (static_cast<int>(parts.size()) != N + 1)
    bad("grid '" + spec + "' must have a time spec and N = " + std::to_string(N) + " space specs");
  Grid g;
  g.t = parse_range(parts[0], "grid time");
  for (int i = 0; i < N; ++i) g.x.push_back(parse_range(parts[static_cast<std::size_t>(i + 1)], "grid x"));
  return g;
}

std::vector<Vec> Grid::points() const {
  const int N = static_cast<int>(x.size());
  std::vector<Vec> out;
  std::vector<std::size_t> idx(static_cast<std::size_t>(N), 0);
  while (true) {
    Vec p(N);
    for (int i = 0; i < N; ++i) p(i) = x[static_cast<std::size_t>(i)][idx[static_cast<std::size_t>(i)]];
    out.push_back(p);
    int k = N - 1;
    while (k >= 0) {
      auto& ik = idx[static_cast<std::size_t>(k)];
      if (++ik < x[static_cast<std::size_t>(k)].size()) break;
      ik = 0;
      --k;
    }
    if (k < 0) break;
  }
  return out;
}

RunOutput run_command(const std::string& name, const Model& m, const std::string& request) {
  if (name == "analyze") return cmd_analyze(m, request);
  if (name == "eval-kernel") return cmd_eval_kernel(m, request);
  if (name == "build-density") return cmd_build_density(m, request);
  if (name == "solve-cauchy") return cmd_solve_cauchy(m, request);
  if (name == "verify") return cmd_verify(m, request);
  if (name == "mc-oracle") return cmd_mc_oracle(m, request);
  bad("unknown subcommand '" + name + "'");
}

}  // namespace kolmo
