#include "kolmo/kolmo.h"

#include "kolmo/cauchy.hpp"
#include "kolmo/model.hpp"
#include "kolmo/parallel.hpp"
#include "kolmo/parametrix.hpp"
#include "kolmo/runner.hpp"

#include <exception>
#include <memory>
#include <new>
#include <string>
#include <thread>

struct kolmo_model {
  kolmo::Model m;
};

struct kolmo_density {
  kolmo::Model m;
  std::unique_ptr<kolmo::LeviEvaluator> ev;
};

struct kolmo_cauchy {
  std::unique_ptr<kolmo::CauchySolver> solver;
  int N = 0;
};

struct kolmo_result {
  kolmo::RunOutput out;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_text;

template <class F>
kolmo_status guard(F&& f) {
  g_error.clear();
  try {
    f();
    return KOLMO_OK;
  } catch (const kolmo::ConfigError& e) {
    g_error = e.what();
    return KOLMO_ERR_CONFIG;
  } catch (const kolmo::NumericalError& e) {
    g_error = e.what();
    return KOLMO_ERR_NUMERICAL;
  } catch (const std::bad_alloc&) {
    g_error = "out of memory";
    return KOLMO_ERR_NUMERICAL;
  } catch (const std::exception& e) {
    g_error = std::string("internal error: ") + e.what();
    return KOLMO_ERR_INTERNAL;
  } catch (...) {
    g_error = "internal error";
    return KOLMO_ERR_INTERNAL;
  }
}

kolmo_status arg_error(const char* msg) {
  g_error = msg;
  return KOLMO_ERR_ARGUMENT;
}

kolmo::Vec to_vec(const double* p, int n) {
  kolmo::Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = p[i];
  return v;
}

}  // namespace

extern "C" {

const char* kolmo_last_error(void) { return g_error.c_str(); }

const char* kolmo_version(void) { return "0.1.0"; }

kolmo_status kolmo_set_threads(int threads) {
  if (threads < 0) return arg_error("threads must be >= 0");
  return guard([&] {
    const int n = threads == 0 ? static_cast<int>(std::max(1u, std::thread::hardware_concurrency())) : threads;
    kolmo::set_threads(n);
  });
}

kolmo_status kolmo_model_load(const char* path, kolmo_model** out) {
  if (!path || !out) return arg_error("null argument");
  *out = nullptr;
  return guard([&] { *out = new kolmo_model{kolmo::load_model(path)}; });
}

kolmo_status kolmo_model_parse(const char* json_text, kolmo_model** out) {
  if (!json_text || !out) return arg_error("null argument");
  *out = nullptr;
  return guard([&] { *out = new kolmo_model{kolmo::parse_model(json_text)}; });
}

void kolmo_model_free(kolmo_model* m) { delete m; }

int kolmo_model_dim(const kolmo_model* m) { return m ? m->m.N : 0; }

int kolmo_model_noise_dim(const kolmo_model* m) { return m ? m->m.d : 0; }

kolmo_status kolmo_analyze(const kolmo_model* m, const char** json_out) {
  if (!m || !json_out) return arg_error("null argument");
  return guard([&] {
    g_text = kolmo::structure_json(m->m.structure, m->m.N, m->m.d);
    *json_out = g_text.c_str();
  });
}

kolmo_status kolmo_gamma(const kolmo_model* m, double delta, double t, const double* x, double T, const double* y,
                         double* out) {
  if (!m || !x || !y || !out) return arg_error("null argument");
  return guard([&] {
    if (!(delta > 0.0)) throw kolmo::ConfigError("delta must be positive");
    const int N = m->m.N;
    *out = kolmo::gamma_delta(delta, t, to_vec(x, N), T, to_vec(y, N), m->m.require_drift(), m->m.quad.min_dt);
  });
}

kolmo_status kolmo_parametrix(const kolmo_model* m, double t, const double* x, double T, const double* y,
                              double* out) {
  if (!m || !x || !y || !out) return arg_error("null argument");
  return guard([&] {
    const int N = m->m.N;
    *out = kolmo::parametrix_eval(m->m.coeffs, m->m.require_drift(), t, to_vec(x, N), T, to_vec(y, N),
                                  kolmo::kWantValue, m->m.quad.time_panels, m->m.quad.min_dt)
               .value;
  });
}

kolmo_status kolmo_density_new(const kolmo_model* m, kolmo_density** out) {
  if (!m || !out) return arg_error("null argument");
  *out = nullptr;
  return guard([&] {
    auto p = std::make_unique<kolmo_density>();
    p->m = m->m;
    p->ev = std::make_unique<kolmo::LeviEvaluator>(p->m.coeffs, p->m.require_drift(), p->m.quad);
    *out = p.release();
  });
}

void kolmo_density_free(kolmo_density* p) { delete p; }

kolmo_status kolmo_density_eval(kolmo_density* p, double t, const double* x, double T, const double* y,
                                double* value, double* grad, double* hess) {
  if (!p || !x || !y || !value) return arg_error("null argument");
  return guard([&] {
    const int N = p->m.N, d = p->m.d;
    int want = kolmo::kWantValue;
    if (grad) want |= kolmo::kWantGrad;
    if (hess) want |= kolmo::kWantHess;
    const kolmo::FieldEval e = p->ev->p(t, to_vec(x, N), T, to_vec(y, N), want);
    *value = e.value;
    if (grad)
      for (int a = 0; a < d; ++a) grad[a] = e.grad(a);
    if (hess)
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) hess[a * d + b] = e.hess(a, b);
  });
}

kolmo_status kolmo_density_diagnostics(kolmo_density* p, double T, const double* y, const char** json_out) {
  if (!p || !y || !json_out) return arg_error("null argument");
  return guard([&] {
    std::string req = "{\"grid\": \"0";
    for (int i = 0; i < p->m.N; ++i) req += ",0";
    req += "\", \"T\": " + kolmo::fmt_num(T) + ", \"derivs\": false, \"y\": [";
    for (int i = 0; i < p->m.N; ++i) req += (i ? ", " : "") + kolmo::fmt_num(y[i]);
    req += "]}";
    const kolmo::RunOutput r = kolmo::run_command("build-density", p->m, req);
    for (const auto& f : r.files)
      if (f.first == "diagnostics.json") g_text = f.second;
    *json_out = g_text.c_str();
  });
}

kolmo_status kolmo_cauchy_new(const kolmo_density* p, const char* g, const char* f, double T, double growth_C,
                              kolmo_cauchy** out) {
  if (!p || !g || !out) return arg_error("null argument");
  *out = nullptr;
  return guard([&] {
    kolmo::CauchyProblem cp;
    cp.g = kolmo::Expr::parse(g, p->m.N);
    cp.f = kolmo::Expr::parse(f ? f : "0", p->m.N);
    cp.T = T;
    cp.growth_C = growth_C;
    kolmo::CauchyConfig cfg;
    cfg.eps_factor = p->m.quad.eps_factor;
    auto c = std::make_unique<kolmo_cauchy>();
    c->N = p->m.N;
    c->solver = std::make_unique<kolmo::CauchySolver>(*p->ev, cp, cfg);
    *out = c.release();
  });
}

void kolmo_cauchy_free(kolmo_cauchy* c) { delete c; }

kolmo_status kolmo_cauchy_solve(kolmo_cauchy* c, double t, const double* x, double* out) {
  if (!c || !x || !out) return arg_error("null argument");
  return guard([&] { *out = c->solver->solve(t, to_vec(x, c->N)); });
}

kolmo_status kolmo_run(const kolmo_model* m, const char* subcommand, const char* request_json, kolmo_result** out) {
  if (!m || !subcommand || !out) return arg_error("null argument");
  *out = nullptr;
  const kolmo_status st = guard([&] {
    *out = new kolmo_result{kolmo::run_command(subcommand, m->m, request_json ? request_json : "")};
  });
  if (st == KOLMO_OK && (*out)->out.verification_failed) {
    g_error = "verification failed";
    return KOLMO_ERR_VERIFY;
  }
  return st;
}

void kolmo_result_free(kolmo_result* r) { delete r; }

size_t kolmo_result_file_count(const kolmo_result* r) { return r ? r->out.files.size() : 0; }

const char* kolmo_result_file_name(const kolmo_result* r, size_t i) {
  if (!r || i >= r->out.files.size()) return nullptr;
  return r->out.files[i].first.c_str();
}

const char* kolmo_result_file_data(const kolmo_result* r, size_t i, size_t* size) {
  if (!r || i >= r->out.files.size()) return nullptr;
  if (size) *size = r->out.files[i].second.size();
  return r->out.files[i].second.c_str();
}

const char* kolmo_result_stdout(const kolmo_result* r) { return r ? r->out.stdout_text.c_str() : nullptr; }

}  // extern "C"
