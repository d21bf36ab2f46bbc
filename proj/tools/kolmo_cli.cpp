#include "kolmo/kolmo.h"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct Options {
  std::string model, out, grid;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  int threads = 1;
  bool force = false;
};

// Optional values are copied into the request only when given, so defaults live in one place (the library).
struct RequestBuilder {
  json j = json::object();
  std::vector<std::function<void()>> finishers;

  template <class T>
  void opt(CLI::App* sub, const std::string& flag, const std::string& key, const std::string& help) {
    auto v = std::make_shared<std::optional<T>>();
    sub->add_option(flag, *v, help);
    finishers.push_back([this, v, key] {
      if (*v) j[key] = **v;
    });
  }

  void vec(CLI::App* sub, const std::string& flag, const std::string& key, const std::string& help) {
    auto v = std::make_shared<std::vector<double>>();
    sub->add_option(flag, *v, help)->delimiter(',');
    finishers.push_back([this, v, key] {
      if (!v->empty()) j[key] = *v;
    });
  }

  void strings(CLI::App* sub, const std::string& flag, const std::string& key, const std::string& help) {
    auto v = std::make_shared<std::vector<std::string>>();
    sub->add_option(flag, *v, help)->delimiter(',');
    finishers.push_back([this, v, key] {
      if (!v->empty()) j[key] = *v;
    });
  }

  void flag_false(CLI::App* sub, const std::string& flag, const std::string& key, const std::string& help) {
    auto v = std::make_shared<bool>(false);
    sub->add_flag(flag, *v, help);
    finishers.push_back([this, v, key] {
      if (*v) j[key] = false;
    });
  }

  std::string finish() {
    for (auto& f : finishers) f();
    return j.dump();
  }
};

int fail(int code, const std::string& msg) {
  std::cerr << "kolmo: " << msg << "\n";
  return code;
}

int prepare_out_dir(const Options& o) {
  std::error_code ec;
  if (fs::exists(o.out, ec)) {
    if (!fs::is_directory(o.out, ec)) return fail(1, "output path '" + o.out + "' exists and is not a directory");
    if (!fs::is_empty(o.out, ec) && !o.force)
      return fail(1, "output directory '" + o.out + "' is not empty (use --force to overwrite)");
  } else {
    fs::create_directories(o.out, ec);
    if (ec) return fail(1, "cannot create output directory '" + o.out + "': " + ec.message());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fundamental solutions of degenerate Kolmogorov operators"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--model", o.model, "model JSON file")->required();
  app.add_option("--out", o.out, "output directory (must not exist or be empty)");
  app.add_option("--grid", o.grid, "grid 't0:t1:nt,x1spec,...'; each spec 'a:b:n' or a value");
  app.add_option("--seed", o.seed, "random seed");
  app.add_option("--tol", o.tol, "tolerance (rank test for analyze, mass tolerance for verify)");
  app.add_option("--threads", o.threads, "worker threads")->check(CLI::Range(1, 1024));
  app.add_flag("--force", o.force, "allow writing into a non-empty output directory");

  RequestBuilder rb;
  auto* analyze = app.add_subcommand("analyze", "block structure of B");

  auto* kernel = app.add_subcommand("eval-kernel", "Gamma^delta or the parametrix on a grid");
  rb.opt<std::string>(kernel, "--kind", "kind", "gamma | parametrix");
  rb.opt<double>(kernel, "--delta", "delta", "covariance scale of Gamma^delta");

  auto* density = app.add_subcommand("build-density", "fundamental solution on a grid");
  rb.flag_false(density, "--no-derivs", "derivs", "omit gradient and Hessian columns");

  auto* cauchy = app.add_subcommand("solve-cauchy", "Cauchy problem on a grid");
  rb.opt<std::string>(cauchy, "--g", "g", "terminal datum expression");
  rb.opt<std::string>(cauchy, "--f", "f", "source expression");
  rb.opt<double>(cauchy, "--growth-C", "growth_C", "declared growth constant of g and f");
  rb.opt<int>(cauchy, "--gh-order", "gh_order", "Gauss-Hermite order per dimension");
  rb.opt<int>(cauchy, "--time-nodes", "time_nodes", "time nodes of the source integral");

  auto* verify = app.add_subcommand("verify", "verification checks");
  rb.strings(verify, "--checks", "checks",
             "comma list of expm_blocks, ellipticity, mass, chapman_kolmogorov, gaussian_bounds, residual, holder");
  rb.opt<double>(verify, "--t", "t", "start time");
  rb.opt<double>(verify, "--s", "s", "intermediate time");
  rb.vec(verify, "--x", "x", "start point");
  rb.opt<double>(verify, "--abar", "abar", "constant zeroth-order coefficient for the mass check");
  rb.opt<int>(verify, "--gh-order", "gh_order", "Gauss-Hermite order");
  rb.opt<int>(verify, "--samples", "samples", "sample count");
  rb.opt<int>(verify, "--points", "points", "points per horizon (gaussian_bounds)");
  rb.vec(verify, "--horizons", "horizons", "horizons T - t (gaussian_bounds)");
  rb.opt<std::string>(verify, "--kind", "kind", "Hölder kind: C_d, C_Y, C_B0, C_B1, C_B2");
  rb.opt<double>(verify, "--exponent", "exponent", "Hölder exponent");
  rb.opt<int>(verify, "--steps", "steps", "midpoint steps (residual)");
  rb.opt<double>(verify, "--slope-tol", "slope_tol", "slope tolerance (gaussian_bounds)");

  auto* mc = app.add_subcommand("mc-oracle", "Monte Carlo histogram and distance to p");
  rb.opt<double>(mc, "--t", "t", "start time");
  rb.vec(mc, "--x", "x", "start point");
  rb.opt<long>(mc, "--paths", "paths", "number of paths");
  rb.opt<int>(mc, "--steps", "steps", "time steps");
  rb.opt<int>(mc, "--bins", "bins", "histogram bins per dimension");
  rb.flag_false(mc, "--no-compare", "compare", "skip the comparison with p");
  rb.opt<int>(mc, "--sub", "sub", "Gauss-Legendre points per bin and dimension");
  rb.opt<double>(mc, "--phi-threshold", "phi_threshold", "bin mass below which the Levi correction is skipped");

  for (auto* sub : {kernel, density, cauchy, verify, mc}) {
    rb.opt<double>(sub, "--T", "T", "target time (default T_bar)");
    if (sub != mc) rb.vec(sub, "--y", "y", "target point");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  CLI::App* chosen = app.get_subcommands().front();
  const std::string name = chosen->get_name();
  std::string request = rb.finish();
  {
    json j = json::parse(request);
    const bool uses_grid = chosen == kernel || chosen == density || chosen == cauchy;
    if (!o.grid.empty()) {
      if (!uses_grid) return fail(1, "--grid is not used by " + name);
      j["grid"] = o.grid;
    }
    if (o.seed) j["seed"] = *o.seed;
    if (o.tol) j["tol"] = *o.tol;
    request = j.dump();
  }
  (void)analyze;

  if (kolmo_set_threads(o.threads) != KOLMO_OK) return fail(1, kolmo_last_error());
  kolmo_model* model = nullptr;
  kolmo_status st = kolmo_model_load(o.model.c_str(), &model);
  if (st != KOLMO_OK) return fail(st == KOLMO_ERR_NUMERICAL ? 2 : 1, kolmo_last_error());

  if (!o.out.empty()) {
    if (const int rc = prepare_out_dir(o)) {
      kolmo_model_free(model);
      return rc;
    }
  }

  kolmo_result* res = nullptr;
  st = kolmo_run(model, name.c_str(), request.c_str(), &res);
  kolmo_model_free(model);
  if (st != KOLMO_OK && st != KOLMO_ERR_VERIFY) {
    const int code = st == KOLMO_ERR_CONFIG || st == KOLMO_ERR_ARGUMENT ? 1 : 2;
    return fail(code, kolmo_last_error());
  }

  const size_t nfiles = kolmo_result_file_count(res);
  if (!o.out.empty()) {
    for (size_t i = 0; i < nfiles; ++i) {
      size_t size = 0;
      const char* data = kolmo_result_file_data(res, i, &size);
      const fs::path path = fs::path(o.out) / kolmo_result_file_name(res, i);
      std::ofstream f(path, std::ios::binary | std::ios::trunc);
      f.write(data, static_cast<std::streamsize>(size));
      if (!f) {
        kolmo_result_free(res);
        return fail(1, "cannot write '" + path.string() + "'");
      }
    }
    std::cout << kolmo_result_stdout(res);
  } else {
    const std::string text = kolmo_result_stdout(res);
    if (!text.empty() && nfiles <= 1) {
      std::cout << text;
    } else {
      if (nfiles > 0) std::cout << kolmo_result_file_data(res, 0, nullptr);
      std::cout << text;
    }
  }
  std::cout.flush();
  kolmo_result_free(res);
  if (st == KOLMO_ERR_VERIFY) return fail(3, "verification failed");
  return 0;
}
