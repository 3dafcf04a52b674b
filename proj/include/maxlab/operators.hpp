#pragma once

#include <optional>
#include <string>
#include <vector>

#include "maxlab/geometry.hpp"
#include "maxlab/grid.hpp"

namespace maxlab {

enum class SearchMode {
  // Every box whose corners lie on the half-cell lattice (cell faces and cell
  // centers). For lambda = 1 this is the exact supremum at cell centers.
  exact_small,
  // Bodies centered at cell centers with half widths on a geometric ladder.
  // Under-approximates the supremum.
  ladder,
};

struct ScaleLadder {
  double ratio = 1.189207115002721;  // 2^(1/4)
  double min_scale = 0.0;            // half width; 0 means half a cell
  double max_scale = 0.0;            // half width; 0 means the longest grid side
};

struct OperatorSpec {
  BodyKind family = BodyKind::box;
  // 0 = centered, 1 = uncentered. The membership test is x in lambda*S for the
  // cell center x; lambda = 0 means x is the center of S.
  double lambda = 1.0;
  SearchMode mode = SearchMode::exact_small;
  ScaleLadder ladder{};
  int subsample = 4;
  bool record_argmax = false;

  void validate() const;
  std::string describe() const;
};

enum class MaximalKind { lambda_body, dyadic, one_sided };

struct MaximalField {
  GridFunction values;
  MaximalKind kind = MaximalKind::lambda_body;
  std::optional<OperatorSpec> spec;  // set for lambda_body
  std::string descriptor;
  // Per-cell maximizing body (first found); empty unless requested.
  std::vector<Body> argmax;
};

MaximalField lambda_maximal(const GridFunction& g, const OperatorSpec& spec);

// Supremum over the ancestors of each cell in the 2^n-adic tree of root.
// Cells outside root only see themselves.
MaximalField dyadic_maximal(const GridFunction& g, const Box& root, int levels);

// (M_R f)(x) = sup_{b > x} (1 / (b - x)) int_x^b f at cell centers; exact.
MaximalField one_sided_maximal(const GridFunction& g);

// The exact set {M_R f > t} for a piecewise-constant 1D density: per-cell
// measure plus the part of the set left of the grid.
struct OneSidedLevelSet {
  std::vector<double> cell_measure;
  double left_extension = 0.0;
  double total() const;
};
OneSidedLevelSet one_sided_superlevel(const GridFunction& g, double t);

struct CounterexampleOptions {
  std::size_t cells_per_axis = 64;
  double half_width = 8.0;   // domain [-L, L]^3
  double max_radius = 1.0;   // ladder truncation
  double ladder_ratio = 1.189207115002721;
  int subsample = 4;
};

struct CounterexampleReport {
  CounterexampleOptions options;
  double cell_size = 0.0;
  std::size_t interior_cells = 0;
  double max_rel_deviation = 0.0;  // max over interior cells of (M0f - f) / f
  Point worst_center{};
  double probe_f = 0.0;            // profile value at the point (2, 0, 0)
  double probe_m = 0.0;
  double origin_f = 0.0;           // cell adjacent to the origin
  double origin_m = 0.0;
  nlohmann::json to_json() const;
};

// f = min(|x|^{-1}, 1) on [-L, L]^3, centered Euclidean balls kept inside the
// domain. Interior cells are those with |x|_inf <= L / 2.
CounterexampleReport centered_counterexample_report(const CounterexampleOptions& options);

// One JSON object per line: {cell, kind, center, half_widths}.
std::string argmax_json_lines(const MaximalField& field);

}  // namespace maxlab
