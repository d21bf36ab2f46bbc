#include "kolmo/model.hpp"

#include "json.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace kolmo {

using json = nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ConfigError("model: " + msg); }

double number(const json& j, const char* key, double fallback, bool required = false) {
  if (!j.contains(key)) {
    if (required) fail(std::string("missing field '") + key + "'");
    return fallback;
  }
  const json& v = j.at(key);
  if (!v.is_number()) fail(std::string("field '") + key + "' must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(std::string("field '") + key + "' must be finite");
  return x;
}

int integer(const json& j, const char* key, int fallback, bool required = false) {
  if (!j.contains(key)) {
    if (required) fail(std::string("missing field '") + key + "'");
    return fallback;
  }
  const json& v = j.at(key);
  if (!v.is_number_integer()) fail(std::string("field '") + key + "' must be an integer");
  return v.get<int>();
}

Expr expr(const json& v, int N, const std::string& where) {
  if (v.is_number()) return Expr::constant(v.get<double>());
  if (!v.is_string()) fail(where + " must be a string expression or a number");
  try {
    return Expr::parse(v.get<std::string>(), N);
  } catch (const ParseError& e) {
    fail(where + ": " + e.what());
  }
}

QuadratureConfig parse_quadrature(const json& j) {
  QuadratureConfig q;
  if (!j.is_object()) fail("'quadrature' must be an object");
  static const std::set<std::string> known = {
      "time_panels", "inner_panels", "time_nodes", "inner_time_nodes", "outer_time_nodes", "gh_order",
      "inner_gh_order", "space_rule", "series_tol", "max_terms", "quad_tol", "envelope_scale",
      "eps_factor", "min_dt", "max_levi_dim", "keep_operator"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) fail("unknown quadrature field '" + it.key() + "'");
  q.time_panels = integer(j, "time_panels", q.time_panels);
  q.inner_panels = integer(j, "inner_panels", q.inner_panels);
  q.time_nodes = integer(j, "time_nodes", q.time_nodes);
  q.inner_time_nodes = integer(j, "inner_time_nodes", q.inner_time_nodes);
  q.outer_time_nodes = integer(j, "outer_time_nodes", q.outer_time_nodes);
  q.gh_order = integer(j, "gh_order", q.gh_order);
  q.inner_gh_order = integer(j, "inner_gh_order", q.inner_gh_order);
  if (j.contains("space_rule")) {
    if (!j["space_rule"].is_string()) fail("'space_rule' must be a string");
    q.space_rule = j["space_rule"].get<std::string>();
  }
  q.series_tol = number(j, "series_tol", q.series_tol);
  q.max_terms = integer(j, "max_terms", q.max_terms);
  q.quad_tol = number(j, "quad_tol", q.quad_tol);
  q.envelope_scale = number(j, "envelope_scale", q.envelope_scale);
  q.eps_factor = number(j, "eps_factor", q.eps_factor);
  q.min_dt = number(j, "min_dt", q.min_dt);
  q.max_levi_dim = integer(j, "max_levi_dim", q.max_levi_dim);
  if (j.contains("keep_operator")) {
    if (!j["keep_operator"].is_boolean()) fail("'keep_operator' must be a boolean");
    q.keep_operator = j["keep_operator"].get<bool>();
  }
  q.validate();
  return q;
}

}  // namespace

const Drift& Model::require_drift() const {
  if (!drift) throw ConfigError("Hörmander condition fails: Kalman rank of (B, d) is below N");
  return *drift;
}

Model parse_model(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) fail("top level must be an object");
  static const std::set<std::string> known = {"N", "d", "B", "T_bar", "mu", "alpha", "coefficients", "quadrature",
                                              "growth_C", "name", "description"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) fail("unknown field '" + it.key() + "'");

  Model m;
  m.N = integer(j, "N", 0, true);
  m.d = integer(j, "d", 0, true);
  if (m.N < 1 || m.N > kMaxDim) fail("N must be in [1, " + std::to_string(kMaxDim) + "]");
  if (m.d < 1 || m.d > m.N) fail("d must be in [1, N]");
  m.T_bar = number(j, "T_bar", 1.0);
  m.mu = number(j, "mu", 1.0);
  m.alpha = number(j, "alpha", 1.0);
  m.growth_C = number(j, "growth_C", 0.0);
  if (!(m.T_bar > 0.0)) fail("T_bar must be positive");
  if (!(m.mu >= 1.0)) fail("mu must be >= 1");
  if (!(m.alpha > 0.0 && m.alpha <= 1.0)) fail("alpha must be in (0, 1]");
  if (!(m.growth_C >= 0.0)) fail("growth_C must be >= 0");

  if (!j.contains("B")) fail("missing field 'B'");
  const json& jb = j["B"];
  if (!jb.is_array()) fail("'B' must be an array");
  std::vector<double> flat;
  for (const json& row : jb) {
    if (row.is_array()) {
      if (static_cast<int>(row.size()) != m.N) fail("'B' rows must have N entries");
      for (const json& v : row) {
        if (!v.is_number()) fail("'B' entries must be numbers");
        flat.push_back(v.get<double>());
      }
    } else if (row.is_number()) {
      flat.push_back(row.get<double>());
    } else {
      fail("'B' entries must be numbers");
    }
  }
  if (static_cast<int>(flat.size()) != m.N * m.N) fail("'B' must have N x N entries");
  m.B.resize(m.N, m.N);
  for (int r = 0; r < m.N; ++r)
    for (int c = 0; c < m.N; ++c) {
      const double v = flat[static_cast<std::size_t>(r * m.N + c)];
      if (!std::isfinite(v)) fail("'B' entries must be finite");
      m.B(r, c) = v;
    }

  if (!j.contains("coefficients")) fail("missing field 'coefficients'");
  const json& jc = j["coefficients"];
  if (!jc.is_object()) fail("'coefficients' must be an object");
  for (auto it = jc.begin(); it != jc.end(); ++it)
    if (it.key() != "a2" && it.key() != "a1" && it.key() != "a0" && it.key() != "holder_norms")
      fail("unknown coefficient field '" + it.key() + "'");
  if (!jc.contains("a2")) fail("missing coefficient 'a2'");
  const json& ja2 = jc["a2"];
  if (!ja2.is_array() || static_cast<int>(ja2.size()) != m.d) fail("'a2' must be a d x d array");
  std::vector<Expr> a2;
  for (int r = 0; r < m.d; ++r) {
    const json& row = ja2[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<int>(row.size()) != m.d) fail("'a2' must be a d x d array");
    for (int c = 0; c < m.d; ++c)
      a2.push_back(expr(row[static_cast<std::size_t>(c)], m.N, "a2[" + std::to_string(r) + "][" + std::to_string(c) + "]"));
  }
  std::vector<Expr> a1;
  if (jc.contains("a1")) {
    const json& ja1 = jc["a1"];
    if (!ja1.is_array() || static_cast<int>(ja1.size()) != m.d) fail("'a1' must be an array of d expressions");
    for (int i = 0; i < m.d; ++i) a1.push_back(expr(ja1[static_cast<std::size_t>(i)], m.N, "a1[" + std::to_string(i) + "]"));
  }
  Expr a0 = jc.contains("a0") ? expr(jc["a0"], m.N, "a0") : Expr();
  m.coeffs = CoefficientField(m.N, m.d, std::move(a2), std::move(a1), std::move(a0), m.mu, m.alpha, m.T_bar);
  if (jc.contains("holder_norms")) {
    const json& jh = jc["holder_norms"];
    if (!jh.is_object()) fail("'holder_norms' must be an object");
    for (auto it = jh.begin(); it != jh.end(); ++it) {
      if (!it.value().is_number()) fail("'holder_norms' values must be numbers");
      m.coeffs.holder_norms[it.key()] = it.value().get<double>();
    }
  }

  if (j.contains("quadrature")) m.quad = parse_quadrature(j["quadrature"]);
  m.structure = block_decompose(Eigen::MatrixXd(m.B), m.d);
  if (m.structure.hoermander_ok) m.drift.emplace(m.B, m.d);
  return m;
}

Model load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model file '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return parse_model(os.str());
}

std::string structure_json(const BlockStructure& s, int N, int d) {
  json j;
  j["N"] = N;
  j["d"] = d;
  j["dims"] = s.hoermander_ok ? s.dims : std::vector<int>{};
  j["Q"] = s.hoermander_ok ? s.Q : 0;
  j["hoermander_ok"] = s.hoermander_ok;
  return j.dump();
}

}  // namespace kolmo
