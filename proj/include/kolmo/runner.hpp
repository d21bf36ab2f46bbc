#pragma once

#include "kolmo/model.hpp"

#include <string>
#include <utility>
#include <vector>

namespace kolmo {

/// Output of one subcommand: named files (written under --out) and text for stdout.
struct RunOutput {
  std::vector<std::pair<std::string, std::string>> files;
  std::string stdout_text;
  bool verification_failed = false;
};

/// Points of a "t0:t1:nt,x1spec,...,xNspec" grid; each spec is "a:b:n" (inclusive) or a single value.
struct Grid {
  std::vector<double> t;
  std::vector<std::vector<double>> x;  // per coordinate
  std::vector<Vec> points() const;     // Cartesian product of x, coordinate 0 slowest
};
Grid parse_grid(const std::string& spec, int N);

/// Subcommands. `request` is a JSON object with the subcommand's options; unknown keys are rejected.
RunOutput run_command(const std::string& name, const Model& m, const std::string& request);

/// "%.17g"
std::string fmt_num(double v);

}  // namespace kolmo
