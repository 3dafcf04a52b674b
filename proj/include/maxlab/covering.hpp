#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "maxlab/geometry.hpp"
#include "maxlab/grid.hpp"
#include "maxlab/operators.hpp"

namespace maxlab {

struct LevelFamilyOptions {
  BodyKind family = BodyKind::box;
  double delta = 1e-3;                 // relative tolerance on "average = t"
  double ratio = 1.189207115002721;    // scale scan ratio
  int subsample = 4;
};

// For every cell center x with f(x) > t, the body s K(x) where the average
// first drops to t, with K the body of half width h/2 centered at x.
std::vector<Body> level_family(const GridFunction& g, double t, const LevelFamilyOptions& options);

// Greedy extraction: repeatedly take the largest body (lowest index on ties)
// whose center is not yet covered. Returns indices into `bodies`.
std::vector<std::size_t> besicovitch_indices(const std::vector<Body>& bodies);
std::vector<Body> besicovitch_extract(const std::vector<Body>& bodies);

// Largest number of bodies sharing a point. Exact for boxes and l^inf balls;
// for other kinds the count is taken at the body centers.
std::size_t max_overlap(const std::vector<Body>& bodies);

// Number of bodies containing each cell center.
GridFunction psi_field(const GridFunction& g, const std::vector<Body>& bodies);

struct PsiReport {
  double t = 0.0;
  double delta = 0.0;
  std::size_t selected = 0;
  double bound = 0.0;              // 5^n
  double max_psi = 0.0;            // at cell centers
  std::size_t max_overlap = 0;     // over all points
  bool prop1 = true;
  double prop2_worst = 0.0;        // largest psi where t > M1 f (1 + delta)
  std::size_t prop2_violations = 0;
  bool prop2 = true;
  double prop3_worst = 0.0;        // largest f / t among uncovered cells with f > t
  std::size_t prop3_violations = 0;
  bool prop3 = true;
  double prop4_residual = 0.0;     // |t sum|K| - sum int_K f| / (t sum|K|)
  bool prop4 = true;
  bool passed() const { return prop1 && prop2 && prop3 && prop4; }
  nlohmann::json to_json() const;
  std::string csv_row() const;
  static std::string csv_header();
};

struct LevelSetCover {
  double t = 0.0;
  double delta = 0.0;
  std::vector<Body> selected;
  GridFunction psi;
  PsiReport report;
  nlohmann::json to_json() const;
};

// Evaluates psi and properties 1-4 against an uncentered maximal field m1 on
// the same lattice.
LevelSetCover build_psi(const GridFunction& g, double t, std::vector<Body> selected,
                        double delta, const MaximalField& m1, int subsample = 4);

// level_family, extraction and build_psi in one call.
LevelSetCover cover_level(const GridFunction& g, double t, const LevelFamilyOptions& options,
                          const MaximalField& m1);

enum class Dichotomy { expansion, spread, neither, both };
std::string to_string(Dichotomy d);

struct DichotomyResult {
  Dichotomy verdict = Dichotomy::neither;
  double integral_f = 0.0;      // int_K f
  double integral_m = 0.0;      // int_K M_lambda f
  double expansion_ratio = 0.0; // integral_m / integral_f
  double spread_min = 0.0;      // min of M_lambda f / <f>_K over (1 - eps) K
  std::size_t spread_cells = 0; // cell centers inside (1 - eps) K
  nlohmann::json to_json() const;
};

// The default field is a ladder lower bound for M_lambda over bodies of K's
// kind; a lower bound can only under-report either condition.
DichotomyResult dichotomy_check(const GridFunction& g, const Body& K, double lambda,
                                double eps, double eta,
                                const std::optional<MaximalField>& field = std::nullopt);

struct PsiSplit {
  std::vector<std::size_t> expanding;  // K': indices satisfying the expansion condition
  std::vector<std::size_t> spreading;  // K'': the rest
  std::size_t neither = 0;             // bodies placed in K'' without either condition
  GridFunction psi1;
  GridFunction psi2;
  GridFunction psi2_eps;               // (1 - eps) K''
  // Cells where psi1 > 0 although t > lambda^{-n} M_lambda f (1 + delta).
  std::size_t vanishing_violations = 0;
  // Same test using the field alone, without the lambda^{-1} K' witnesses.
  std::size_t field_only_violations = 0;
  double max_scaling_error = 0.0;      // | |(1-eps)K| / ((1-eps)^n |K|) - 1 |
  nlohmann::json to_json() const;
};

PsiSplit split_psi(const GridFunction& g, const LevelSetCover& cover, double lambda, double eps,
                   double eta, const MaximalField& m_lambda);

struct SteinResult {
  double lhs = 0.0;  // int_K0 f ln(max(1, f)) after normalization
  double rhs = 0.0;  // int_K0 M_0 f
  double empirical_c = 0.0;
  double scale = 1.0;  // normalization factor applied to f
  nlohmann::json to_json() const;
};

// f is restricted to the cells whose centers lie in K0 and scaled to average 1.
SteinResult stein_check(const GridFunction& g, const Body& K0);

// (1 + 1 / ((p - 1) B))^{1/p}.
double uncentered_constant(double p, double besicovitch);

struct LayerCakeRow {
  double t = 0.0;
  std::size_t selected = 0;
  double lhs = 0.0;  // t^{p-1} int psi = t^{p-1} sum |K_j|
  double rhs = 0.0;  // t^{p-2} int psi f, from psi at cell centers
};

struct LayerCakeReport {
  double p = 2.0;
  std::vector<LayerCakeRow> rows;
  double lhs = 0.0;  // trapezoid over the ladder
  double rhs = 0.0;
  double rel_diff = 0.0;
  double besicovitch = 0.0;
  double constant = 0.0;  // uncentered_constant(p, besicovitch)
  nlohmann::json to_json() const;
};

LayerCakeReport layer_cake_report(const GridFunction& g, double p, const std::vector<double>& t_grid,
                                  const LevelFamilyOptions& options,
                                  std::optional<double> besicovitch = std::nullopt);

// Geometric ladder of `count` levels between lo and hi.
std::vector<double> geometric_ladder(double lo, double hi, std::size_t count);

}  // namespace maxlab
