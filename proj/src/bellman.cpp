#include "maxlab/bellman.hpp"

#include <algorithm>
#include <cmath>

#include "maxlab/error.hpp"
#include "maxlab/parallel.hpp"

namespace maxlab {

namespace {

void check_parameters(double p, double lambda) {
  if (!(p > 1.0) || !std::isfinite(p)) throw Error(ErrorKind::invalid_exponent, "p must exceed 1");
  if (!(lambda > 1.0) || !std::isfinite(lambda)) {
    throw Error(ErrorKind::invalid_parameter, "lambda must exceed 1");
  }
}

void check_point(const BellmanPoint& pt) {
  check_parameters(pt.p, pt.lambda);
  if (!(pt.x >= 0.0 && pt.y >= 0.0 && pt.z >= 0.0) || !std::isfinite(pt.x) ||
      !std::isfinite(pt.y) || !std::isfinite(pt.z)) {
    throw Error(ErrorKind::domain, "Bellman point coordinates must be finite and nonnegative");
  }
  if (pt.x > pt.z * (1.0 + 1e-12) + 1e-300) {
    throw Error(ErrorKind::domain, "Bellman point needs x <= z");
  }
}

bool near(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

double bellman_coefficient(double p, double lambda) {
  check_parameters(p, lambda);
  const double l = std::log1p(lambda - 1.0);
  return std::expm1(p * l) / (lambda * std::expm1((p - 1.0) * l));
}

double bellman_eval(const BellmanPoint& pt) {
  check_point(pt);
  const double c = bellman_coefficient(pt.p, pt.lambda);
  const double gap = pt.y - pt.x * std::pow(pt.z, pt.p - 1.0);
  return std::pow(pt.z, pt.p) + c * std::max(gap, 0.0);
}

double chord_margin(double s, double p, double lambda) {
  check_parameters(p, lambda);
  if (!(s >= 1.0 && s <= lambda)) throw Error(ErrorKind::domain, "s must lie in [1, lambda]");
  const double sp = std::pow(s, p);
  const double lp = std::pow(lambda, p);
  // Chord form keeps both endpoints exactly zero.
  return (sp - 1.0) - (lp - 1.0) * ((sp - s) / (lp - lambda));
}

double main_inequality_margin(const BellmanPoint& parent,
                              const std::vector<WeightedPoint>& children) {
  check_point(parent);
  if (children.empty()) throw Error(ErrorKind::consistency, "no children");
  long double wsum = 0.0L, xsum = 0.0L, ysum = 0.0L, rhs = 0.0L;
  for (const auto& c : children) {
    check_point(c.point);
    if (!(c.weight > 0.0)) throw Error(ErrorKind::consistency, "child weights must be positive");
    if (c.point.p != parent.p || c.point.lambda != parent.lambda) {
      throw Error(ErrorKind::consistency, "children use different p or lambda");
    }
    if (c.point.z < std::max(c.point.x, parent.z) * (1.0 - 1e-12)) {
      throw Error(ErrorKind::consistency, "child z must be at least max(x_P, z_Q)");
    }
    wsum += c.weight;
    xsum += static_cast<long double>(c.weight) * c.point.x;
    ysum += static_cast<long double>(c.weight) * c.point.y;
    rhs += static_cast<long double>(c.weight) * bellman_eval(c.point);
  }
  if (std::abs(static_cast<double>(wsum) - 1.0) > 1e-12) {
    throw Error(ErrorKind::consistency, "child weights do not sum to 1");
  }
  if (!near(static_cast<double>(xsum), parent.x, 1e-9) ||
      !near(static_cast<double>(ysum), parent.y, 1e-9)) {
    throw Error(ErrorKind::consistency, "children do not aggregate to the parent");
  }
  return static_cast<double>(rhs - static_cast<long double>(bellman_eval(parent)));
}

TheoremConstants theorem_constants(double p, double lambda, int n) {
  check_parameters(p, lambda);
  if (n < 1) throw Error(ErrorKind::invalid_parameter, "dimension must be at least 1");
  TheoremConstants out;
  out.general = std::pow(bellman_coefficient(p, lambda), 1.0 / p);
  out.limit = std::pow(p / (p - 1.0), 1.0 / p);
  out.dyadic = std::pow(bellman_coefficient(p, std::ldexp(1.0, n)), 1.0 / p);
  return out;
}

nlohmann::json NodeCertificate::to_json() const {
  return {{"node_id", node_id}, {"x", x},     {"y", y},          {"z", z},
          {"lhs", lhs},         {"rhs", rhs}, {"margin", margin}};
}

nlohmann::json Certificate::to_json() const {
  nlohmann::json out = {{"x", x},     {"y", y},     {"z", z},
                        {"lhs", lhs}, {"rhs", rhs}, {"margin", margin}};
  out["nodes"] = nlohmann::json::array();
  for (const auto& n : nodes) out["nodes"].push_back(n.to_json());
  return out;
}

double enclosing_box_sup(const GridFunction& g, const Box& S) {
  if (S.dim != g.dim()) throw Error(ErrorKind::dimension, "box and grid dimensions differ");
  if (S.inverted()) throw Error(ErrorKind::invalid_region, "inverted box");
  const SummedTable table(g);
  const double h = g.cell_size();
  // Within one cell the average is monotone in each face coordinate, so the
  // sup is attained with faces on cell boundaries or on S itself.
  std::array<std::vector<double>, kMaxDim> lows, highs;
  for (int a = 0; a < kMaxDim; ++a) {
    if (a >= g.dim()) {
      lows[a] = {0.0};
      highs[a] = {0.0};
      continue;
    }
    const double o = g.origin()[a];
    lows[a].push_back(S.lo[a]);
    highs[a].push_back(S.hi[a]);
    for (std::size_t k = 0; k <= g.extent(a); ++k) {
      const double face = o + static_cast<double>(k) * h;
      if (face < S.lo[a]) lows[a].push_back(face);
      if (face > S.hi[a]) highs[a].push_back(face);
    }
  }
  double best = table.box_average(S);
  Box R = S;
  for (double l0 : lows[0]) {
    for (double h0 : highs[0]) {
      for (double l1 : lows[1]) {
        for (double h1 : highs[1]) {
          for (double l2 : lows[2]) {
            for (double h2 : highs[2]) {
              R.lo = {l0, l1, l2};
              R.hi = {h0, h1, h2};
              best = std::max(best, table.box_average(R));
            }
          }
        }
      }
    }
  }
  return best;
}

Certificate lemma_certificate(const GridFunction& g, const Box& S, const FiltrationTree& tree,
                              double p, double lambda, const MaximalField& field) {
  check_parameters(p, lambda);
  if (tree.nodes.empty()) throw Error(ErrorKind::configuration, "empty tree");
  const Box& root = tree.root().box;
  for (int a = 0; a < S.dim; ++a) {
    const double tol = 1e-12 * std::max(1.0, root.side(a));
    if (S.dim != root.dim || std::abs(S.lo[a] - root.lo[a]) > tol ||
        std::abs(S.hi[a] - root.hi[a]) > tol) {
      throw Error(ErrorKind::configuration, "tree is not rooted at S");
    }
  }
  if (!field.values.same_lattice(g)) {
    throw Error(ErrorKind::configuration, "maximal field lives on a different grid");
  }
  if (tree.family == TreeFamily::dyadic) {
    if (field.kind != MaximalKind::dyadic) {
      throw Error(ErrorKind::configuration, "dyadic tree needs a dyadic maximal field");
    }
    if (lambda < std::ldexp(1.0, g.dim())) {
      throw Error(ErrorKind::invalid_parameter, "dyadic cubes are only 2^n-dense");
    }
  } else {
    const bool ok = field.kind == MaximalKind::lambda_body && field.spec &&
                    (field.spec->family == BodyKind::box ||
                     field.spec->family == BodyKind::ball_inf) &&
                    field.spec->lambda == 1.0 && field.spec->mode == SearchMode::exact_small;
    if (!ok) {
      throw Error(ErrorKind::configuration,
                  "box tree needs the exact uncentered box maximal field");
    }
  }
  const Box bounds = g.bounds();
  for (int a = 0; a < S.dim; ++a) {
    if (S.lo[a] < bounds.lo[a] - 1e-12 || S.hi[a] > bounds.hi[a] + 1e-12) {
      throw Error(ErrorKind::invalid_region, "S must lie inside the grid");
    }
  }

  const SummedTable t1(g);
  const SummedTable tp(g.pow(p));
  const std::size_t count = tree.nodes.size();
  std::vector<double> x(count), y(count), z(count);
  for (std::size_t i = 0; i < count; ++i) {
    x[i] = t1.box_average(tree.nodes[i].box);
    y[i] = tp.box_average(tree.nodes[i].box);
  }
  z[0] = tree.family == TreeFamily::boxes ? std::max(x[0], enclosing_box_sup(g, S)) : x[0];
  // Parents always precede children in the node vector.
  for (std::size_t i = 1; i < count; ++i) {
    z[i] = std::max(z[static_cast<std::size_t>(tree.nodes[i].parent)], x[i]);
  }

  const std::vector<std::size_t> leaves = tree.leaves();
  std::vector<long double> leaf_integral(leaves.size(), 0.0L);
  const double h = g.cell_size();
  parallel_for(0, leaves.size(), [&](std::size_t k) {
    const Box& b = tree.nodes[leaves[k]].box;
    Index lo{0, 0, 0}, hi{1, 1, 1};
    for (int a = 0; a < g.dim(); ++a) {
      const double o = g.origin()[a];
      const auto n = static_cast<long>(g.extent(a));
      lo[a] = static_cast<std::size_t>(std::clamp<long>(
          static_cast<long>(std::floor((b.lo[a] - o) / h)), 0, n - 1));
      hi[a] = static_cast<std::size_t>(std::clamp<long>(
          static_cast<long>(std::ceil((b.hi[a] - o) / h)), 1, n));
    }
    long double acc = 0.0L;
    const double zl = z[leaves[k]];
    for (std::size_t i = lo[0]; i < hi[0]; ++i) {
      for (std::size_t j = lo[1]; j < hi[1]; ++j) {
        for (std::size_t l = lo[2]; l < hi[2]; ++l) {
          const std::size_t c = g.flat({i, j, l});
          const double ov = g.cell_box(c).overlap_volume(b);
          if (ov <= 0.0) continue;
          acc += static_cast<long double>(ov) * std::pow(std::max(field.values[c], zl), p);
        }
      }
    }
    leaf_integral[k] = acc;
  });
  std::vector<long double> node_integral(count, 0.0L);
  for (std::size_t k = 0; k < leaves.size(); ++k) {
    long i = static_cast<long>(leaves[k]);
    while (i >= 0) {
      node_integral[static_cast<std::size_t>(i)] += leaf_integral[k];
      i = tree.nodes[static_cast<std::size_t>(i)].parent;
    }
  }

  Certificate cert;
  cert.nodes.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    NodeCertificate& n = cert.nodes[i];
    n.node_id = i;
    n.x = x[i];
    n.y = y[i];
    n.z = z[i];
    n.lhs = static_cast<double>(node_integral[i] / tree.nodes[i].box.volume());
    n.rhs = bellman_eval({x[i], y[i], z[i], p, lambda});
    n.margin = n.lhs - n.rhs;
  }
  cert.x = x[0];
  cert.y = y[0];
  cert.z = z[0];
  cert.lhs = cert.nodes[0].lhs;
  cert.rhs = cert.nodes[0].rhs;
  cert.margin = cert.nodes[0].margin;
  return cert;
}

std::vector<double> tree_margins(const FiltrationTree& tree) {
  std::vector<double> out;
  const auto point = [&](const FiltrationNode& n) {
    return BellmanPoint{n.x, n.y, n.z, tree.p, tree.lambda};
  };
  for (const auto& n : tree.nodes) {
    if (n.children.empty()) continue;
    std::vector<WeightedPoint> children;
    double total = 0.0;
    for (std::size_t c : n.children) {
      children.push_back({tree.nodes[c].box.volume() / n.box.volume(), point(tree.nodes[c])});
      total += children.back().weight;
    }
    // Volume fractions can miss 1 by an ulp.
    for (auto& c : children) c.weight /= total;
    out.push_back(main_inequality_margin(point(n), children));
  }
  return out;
}

}  // namespace maxlab
