#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "maxlab/geometry.hpp"
#include "maxlab/grid.hpp"

namespace maxlab {

enum class TreeFamily { boxes, dyadic };

struct FiltrationNode {
  Box box;
  long parent = -1;
  std::vector<std::size_t> children;
  int depth = 0;
  int cut_axis = -1;  // -1 for leaves and for dyadic splits
  double cut_coord = 0.0;
  double x = 0.0;  // average of f
  double y = 0.0;  // average of f^p
  double z = 0.0;  // largest average over the node and its ancestors
};

// Node 0 is the root. Children always tile their parent.
struct FiltrationTree {
  TreeFamily family = TreeFamily::boxes;
  double lambda = 2.0;  // density parameter the tree was built for
  double p = 2.0;       // exponent used for the y statistics
  std::vector<FiltrationNode> nodes;

  const FiltrationNode& root() const { return nodes.front(); }
  int depth() const;
  std::vector<std::size_t> leaves() const;
  // F_m: nodes at depth m together with leaves of smaller depth.
  std::vector<std::size_t> level(int m) const;
  nlohmann::json to_json() const;
  // Rectangles of the leaves; 2D trees only.
  std::string to_svg(double pixels = 512.0) const;
};

struct CutInfo {
  int axis = 0;
  double coord = 0.0;
  double fraction = 0.5;  // (coord - lo) / side
  bool equalized = true;  // false when the cut stopped at the extreme position
  double minus_average = 0.0;
  double plus_average = 0.0;
};

struct SplitResult {
  Box minus;
  Box plus;
  CutInfo cut;
};

// One hyperplane split of P across its longest side (lowest axis on ties).
SplitResult split_box(const SummedTable& table, const Box& P, double lambda_eff);
SplitResult split_box(const GridFunction& g, const Box& P, double lambda_eff);

struct StopCriteria {
  std::optional<int> max_depth;
  std::optional<double> min_diam;  // split while the diameter is >= min_diam
};

struct FiltrationOptions {
  double lambda = 1.5;
  double p = 2.0;
  StopCriteria stop;
};

FiltrationTree build_filtration(const GridFunction& g, const Box& root,
                                const FiltrationOptions& options);

// Complete 2^n-adic tree of depth `levels` under a cube.
FiltrationTree dyadic_filtration(const GridFunction& g, const Box& root, int levels,
                                 double p = 2.0);

struct DensityItem {
  int item = 0;  // 1..7 for the definition items, 8 for the volume fraction
  std::string name;
  bool passed = true;
  double worst = 0.0;  // worst margin; positive means violation
  std::size_t violations = 0;
  std::string detail;
};

struct DensityReport {
  std::vector<DensityItem> items;
  double max_volume_fraction = 0.0;
  bool passed() const;
  nlohmann::json to_json() const;
};

DensityReport verify_density(const FiltrationTree& tree, const GridFunction& g, double lambda);

}  // namespace maxlab
