#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "maxlab/grid.hpp"
#include "maxlab/search.hpp"

namespace maxlab {

// Everything a run depends on. A run is a function of its config alone.
struct RunConfig {
  std::string command;

  // Grid source: a .ggrid path or a builtin generator.
  std::string grid_path;
  std::string builtin;       // indicator, linear_ramp, superharmonic3d, random
  std::size_t cells = 0;     // cells per axis for builtins; 0 picks the default
  int dim = 0;               // builtin dimension; 0 picks the default

  std::string op = "uncentered-box";
  std::string mode = "auto";  // exact, ladder, auto (exact in 1D)
  std::optional<double> lambda;
  double p = 2.0;
  std::uint64_t seed = 1;
  std::string out_dir;
  double tol = 1e-3;

  // ratio / optimize
  std::size_t margin_cells = 0;
  int refine = 1;
  std::size_t steps = 100000;
  std::size_t chains = 1;

  // partition / bellman-verify
  std::optional<double> min_diam;
  std::optional<int> max_depth;

  // cover / grafakos / dichotomy
  std::optional<double> level;
  std::size_t level_count = 30;
  double eps = 0.1;
  double eta = 0.1;

  // constants
  bool lambda_limit = false;
  bool dyadic = false;
  int n = 1;
  std::optional<double> besicovitch;

  // counterexample
  double half_width = 8.0;
  double max_radius = 1.0;
  int subsample = 4;

  nlohmann::json to_json() const;
};

GridFunction load_grid(const RunConfig& config);
RatioOperator parse_operator(const RunConfig& config, int dim);

// Executes one command. Reports go to out; a failure prints a single line
// "error: <kind>: <message>" to err and returns a nonzero status.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

// Parses argv-style arguments (without the program name) and runs.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace maxlab
