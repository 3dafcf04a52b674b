#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "maxlab/grid.hpp"
#include "maxlab/operators.hpp"

namespace maxlab {

enum class OperatorKind { lambda_body, dyadic, one_sided };

struct RatioOperator {
  OperatorKind kind = OperatorKind::lambda_body;
  OperatorSpec spec;  // used for lambda_body

  static RatioOperator uncentered_box();
  static RatioOperator dyadic_cubes();
  static RatioOperator one_sided_right();
  std::string describe() const;
};

struct RatioOptions {
  // Zero cells appended on every side of every axis before M f is evaluated.
  // Ignored for the dyadic operator, whose domain is the root cube.
  std::size_t margin_cells = 0;
  // Each cell is split into refine^n equal cells; the density is unchanged and
  // M f is sampled at more points.
  int refine = 1;
};

// The constant the ratio is compared against.
struct ReferenceConstant {
  double value = 1.0;
  std::string name;  // "parallelepipeds", "convex-bodies", "dyadic", "one-sided", "pointwise"
};
ReferenceConstant reference_constant(const RatioOperator& op, int dim, double p);

struct RatioReport {
  double p = 2.0;
  std::string op;
  double norm_f = 0.0;
  double norm_mf = 0.0;  // over the domain
  double ratio = 0.0;
  // Lower bound for the p-th power of the part of ||M f|| outside the domain:
  // uncentered boxes, one-sided (1D) and dyadic; 0 for the other operators.
  double tail_estimate = 0.0;
  double ratio_with_tail = 0.0;
  ReferenceConstant constant;
  double margin = 0.0;  // ratio_with_tail - constant
  Box domain;
  // Distance from the support of f to the domain boundary; absent for dyadic.
  std::optional<double> truncation_radius;
  std::vector<std::size_t> shape;
  double cell_size = 0.0;
  nlohmann::json to_json() const;
};

RatioReport ratio(const GridFunction& g, const RatioOperator& op, double p,
                  const RatioOptions& options = {});

struct AnnealOptions {
  std::size_t steps = 100000;
  double t_start = 0.02;       // temperature in ratio units
  double t_end = 1e-5;
  double sigma = 0.4;          // log-scale of multiplicative perturbations
  double grow_probability = 0.1;
  std::size_t margin_cells = 0;  // 0 means a quarter of the cells per axis
  // The final report re-evaluates the best f with finer sampling of M f and a
  // wider domain; 0 margin means four times the cells per axis.
  int certify_refine = 8;
  std::size_t certify_margin_cells = 0;
};

struct SearchResult {
  std::uint64_t seed = 0;
  GridFunction best;
  RatioReport report;      // best f under the certify settings
  double best_objective = 0.0;
  std::vector<std::pair<std::size_t, double>> trace;  // (step, best objective so far)
  nlohmann::json to_json() const;
  std::string trace_tsv() const;
};

// Simulated annealing over nonnegative cell values on [0, 1]^n with
// shape[a] cells per axis. The objective is ratio_with_tail.
SearchResult minimize_ratio(const RatioOperator& op, double p, const std::vector<std::size_t>& shape,
                            const AnnealOptions& options, std::uint64_t seed);
// One chain per seed, run in parallel, results in seed order.
std::vector<SearchResult> minimize_ratio_chains(const RatioOperator& op, double p,
                                                const std::vector<std::size_t>& shape,
                                                const AnnealOptions& options,
                                                const std::vector<std::uint64_t>& seeds);

struct GrafakosRow {
  double t = 0.0;
  double lhs = 0.0;  // t |{M_R f > t}|
  double rhs = 0.0;  // integral of f over the same set
  double residual = 0.0;
};
struct GrafakosReport {
  std::vector<GrafakosRow> rows;
  double max_residual = 0.0;
  nlohmann::json to_json() const;
};
GrafakosReport grafakos_check(const GridFunction& g, const std::vector<double>& t_grid);

struct AlmostCenteredBound {
  std::optional<double> power;     // A^p
  std::optional<double> constant; // A
  double numerator = 0.0;
  double denominator = 0.0;
  std::string diagnostic;          // set when the numerator is not positive
  nlohmann::json to_json() const;
};
AlmostCenteredBound almost_centered_bound(int n, double p, double lambda, double eps, double eta,
                                          double besicovitch);

}  // namespace maxlab
