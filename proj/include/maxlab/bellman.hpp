#pragma once

#include <vector>

#include <json.hpp>

#include "maxlab/geometry.hpp"
#include "maxlab/grid.hpp"
#include "maxlab/operators.hpp"
#include "maxlab/partition.hpp"

namespace maxlab {

// x = <f>_Q, y = <f^p>_Q, z = sup of <f>_R over family members R containing Q.
struct BellmanPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double p = 2.0;
  double lambda = 2.0;
};

// (lambda^p - 1) / (lambda^p - lambda), evaluated without cancellation near 1.
double bellman_coefficient(double p, double lambda);

// B = z^p + c (y - x z^{p-1})_+.
double bellman_eval(const BellmanPoint& pt);

// (s^p - 1) - c (s^p - s) for s in [1, lambda]; nonnegative by convexity.
double chord_margin(double s, double p, double lambda);

struct WeightedPoint {
  double weight = 0.0;  // |P| / |Q|
  BellmanPoint point;
};

// sum_P w_P B(P) - B(Q). Aggregation errors throw a consistency error; the
// density condition x_P <= lambda x_Q is deliberately not checked.
double main_inequality_margin(const BellmanPoint& parent,
                              const std::vector<WeightedPoint>& children);

struct TheoremConstants {
  double general = 0.0;  // ((lambda^p - 1) / (lambda^p - lambda))^{1/p}
  double limit = 0.0;    // (p / (p - 1))^{1/p}
  double dyadic = 0.0;   // general at lambda = 2^n
};
TheoremConstants theorem_constants(double p, double lambda, int n);

struct NodeCertificate {
  std::size_t node_id = 0;
  double x = 0.0, y = 0.0, z = 0.0;
  double lhs = 0.0, rhs = 0.0, margin = 0.0;
  nlohmann::json to_json() const;
};

struct Certificate {
  double lhs = 0.0;  // <(M f)^p>_S
  double rhs = 0.0;  // B(x_S, y_S, z_S)
  double margin = 0.0;
  double x = 0.0, y = 0.0, z = 0.0;
  std::vector<NodeCertificate> nodes;  // one per tree node, root first
  nlohmann::json to_json() const;
};

// Lower-bound certificate on S = tree root. The maximal field must come from
// the tree's family: dyadic trees need a dyadic field, box trees an exact
// uncentered box field. On each leaf the field is raised to the leaf's z,
// which is itself an average over a family member containing the leaf.
// z_S is the exact sup over boxes containing S for box trees and the root
// average for dyadic trees.
Certificate lemma_certificate(const GridFunction& g, const Box& S, const FiltrationTree& tree,
                              double p, double lambda, const MaximalField& field);

// main_inequality_margin at every internal node of a filtration, with the
// tree's own p and lambda and children weighted by volume fraction.
std::vector<double> tree_margins(const FiltrationTree& tree);

// Exact sup of <f>_R over boxes R containing S.
double enclosing_box_sup(const GridFunction& g, const Box& S);

}  // namespace maxlab
