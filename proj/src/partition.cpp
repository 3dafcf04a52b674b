#include "maxlab/partition.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "maxlab/error.hpp"
#include "maxlab/parallel.hpp"

namespace maxlab {

namespace {

constexpr double kEqualTol = 1e-12;
constexpr std::size_t kMaxNodes = std::size_t{1} << 24;

int longest_axis(const Box& box) {
  int axis = 0;
  for (int a = 1; a < box.dim; ++a) {
    if (box.side(a) > box.side(axis) * (1.0 + kEqualTol)) axis = a;
  }
  return axis;
}

bool box_within(const Box& inner, const Box& outer, double tol) {
  for (int a = 0; a < inner.dim; ++a) {
    const double slack = tol * outer.side(a);
    if (inner.lo[a] < outer.lo[a] - slack || inner.hi[a] > outer.hi[a] + slack) return false;
  }
  return true;
}

struct CutEvaluator {
  const SummedTable& table;
  const Box& P;
  int axis;
  double volume;

  Box minus(double c) const {
    Box b = P;
    b.hi[axis] = c;
    return b;
  }
  Box plus(double c) const {
    Box b = P;
    b.lo[axis] = c;
    return b;
  }
  double coord(double fraction) const { return P.lo[axis] + fraction * P.side(axis); }
  // Difference of averages plus - minus at a fractional position.
  double diff(double fraction) const {
    const double c = coord(fraction);
    const double mm = table.box_mass(minus(c));
    const double mp = table.box_mass(plus(c));
    return mp / (volume * (1.0 - fraction)) - mm / (volume * fraction);
  }
};

void node_stats(FiltrationNode& node, const SummedTable& t1, const SummedTable& tp,
                double parent_z) {
  node.x = t1.box_average(node.box);
  node.y = tp.box_average(node.box);
  node.z = std::max(parent_z, node.x);
}

}  // namespace

int FiltrationTree::depth() const {
  int d = 0;
  for (const auto& n : nodes) d = std::max(d, n.depth);
  return d;
}

std::vector<std::size_t> FiltrationTree::leaves() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].children.empty()) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FiltrationTree::level(int m) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    if (n.depth == m || (n.depth < m && n.children.empty())) out.push_back(i);
  }
  return out;
}

nlohmann::json FiltrationTree::to_json() const {
  const std::function<nlohmann::json(std::size_t)> emit = [&](std::size_t i) {
    const auto& n = nodes[i];
    nlohmann::json j = {{"box", maxlab::to_json(n.box)}, {"x", n.x}, {"y", n.y}, {"z", n.z}};
    if (n.cut_axis >= 0) {
      j["cut_axis"] = n.cut_axis;
      j["cut_coord"] = n.cut_coord;
    } else {
      j["cut_axis"] = nullptr;
      j["cut_coord"] = nullptr;
    }
    j["children"] = nlohmann::json::array();
    for (std::size_t c : n.children) j["children"].push_back(emit(c));
    return j;
  };
  nlohmann::json out = {{"family", family == TreeFamily::boxes ? "boxes" : "dyadic"},
                        {"lambda", lambda},
                        {"p", p},
                        {"node_count", nodes.size()},
                        {"depth", depth()}};
  out["root"] = emit(0);
  return out;
}

std::string FiltrationTree::to_svg(double pixels) const {
  const Box& r = root().box;
  if (r.dim != 2) throw Error(ErrorKind::dimension, "SVG output needs a 2D tree");
  const double scale = pixels / std::max(r.side(0), r.side(1));
  std::ostringstream os;
  os.precision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << r.side(0) * scale
     << "\" height=\"" << r.side(1) * scale << "\">\n";
  double zmax = 0.0;
  for (const auto& n : nodes) zmax = std::max(zmax, n.x);
  for (std::size_t i : leaves()) {
    const Box& b = nodes[i].box;
    const int shade = zmax > 0.0 ? static_cast<int>(255.0 * (1.0 - nodes[i].x / zmax)) : 255;
    os << "<rect x=\"" << (b.lo[0] - r.lo[0]) * scale << "\" y=\""
       << (r.hi[1] - b.hi[1]) * scale << "\" width=\"" << b.side(0) * scale
       << "\" height=\"" << b.side(1) * scale << "\" fill=\"rgb(" << shade << ',' << shade
       << ",255)\" stroke=\"black\" stroke-width=\"0.5\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

SplitResult split_box(const SummedTable& table, const Box& P, double lambda_eff) {
  if (!(lambda_eff > 1.0 && lambda_eff <= 2.0)) {
    throw Error(ErrorKind::invalid_parameter, "split parameter must lie in (1, 2]");
  }
  if (P.inverted() || !(P.volume() > 0.0)) {
    throw Error(ErrorKind::degenerate_box, "cannot split a box of zero volume");
  }
  const int axis = longest_axis(P);
  const double volume = P.volume();
  const CutEvaluator ev{table, P, axis, volume};
  const double average = table.box_mass(P) / volume;
  const double tol = kEqualTol * std::max(average, 1e-300);

  double fraction = 0.5;
  bool equalized = true;
  const double d_mid = ev.diff(0.5);
  if (std::abs(d_mid) > tol) {
    // Move toward the facet of the smaller-average part, no further than the
    // position where the larger part keeps volume |P| / lambda_eff.
    const bool toward_lower = d_mid > 0.0;
    const double limit = toward_lower ? 1.0 - 1.0 / lambda_eff : 1.0 / lambda_eff;
    std::vector<double> stops;
    const double h = table.cell_size();
    const double lo = P.lo[axis], side = P.side(axis);
    const double o = table.origin()[axis];
    const double a = lo + std::min(0.5, limit) * side, b = lo + std::max(0.5, limit) * side;
    for (double k = std::ceil((a - o) / h); o + k * h < b; k += 1.0) {
      const double f = (o + k * h - lo) / side;
      if (f > std::min(0.5, limit) && f < std::max(0.5, limit)) stops.push_back(f);
    }
    if (toward_lower) std::reverse(stops.begin(), stops.end());
    stops.push_back(limit);
    // Sign of the difference that says "keep moving".
    const double sign = toward_lower ? 1.0 : -1.0;
    double prev = 0.5;
    fraction = limit;
    equalized = false;
    for (double f : stops) {
      const double d = sign * ev.diff(f);
      if (std::abs(d) <= tol) {
        fraction = f;
        equalized = true;
        break;
      }
      if (d < 0.0) {
        double keep = prev, cross = f;
        while (std::abs(cross - keep) > kEqualTol) {
          const double mid = 0.5 * (keep + cross);
          const double dm = sign * ev.diff(mid);
          if (dm > 0.0) {
            keep = mid;
          } else {
            cross = mid;
          }
        }
        fraction = keep;
        equalized = true;
        break;
      }
      prev = f;
    }
  }

  SplitResult out;
  const double coord = ev.coord(fraction);
  out.minus = ev.minus(coord);
  out.plus = ev.plus(coord);
  out.cut.axis = axis;
  out.cut.coord = coord;
  out.cut.fraction = fraction;
  out.cut.equalized = equalized;
  out.cut.minus_average = table.box_average(out.minus);
  out.cut.plus_average = table.box_average(out.plus);
  const double bound = lambda_eff * average * (1.0 + 1e-9) + 1e-300;
  if (out.cut.minus_average > bound || out.cut.plus_average > bound) {
    throw Error(ErrorKind::consistency, "split violates the average bound");
  }
  const double fmax = std::max(fraction, 1.0 - fraction);
  if (fmax > 1.0 / lambda_eff + 1e-12) {
    throw Error(ErrorKind::consistency, "split leaves a part that is too large");
  }
  return out;
}

SplitResult split_box(const GridFunction& g, const Box& P, double lambda_eff) {
  return split_box(SummedTable(g), P, lambda_eff);
}

FiltrationTree build_filtration(const GridFunction& g, const Box& root,
                                const FiltrationOptions& options) {
  if (!(options.lambda > 1.0)) throw Error(ErrorKind::invalid_parameter, "lambda must exceed 1");
  if (!(options.p > 1.0)) throw Error(ErrorKind::invalid_exponent, "p must exceed 1");
  if (!options.stop.max_depth && !options.stop.min_diam) {
    throw Error(ErrorKind::configuration, "a filtration needs max_depth or min_diam");
  }
  if (options.stop.max_depth && *options.stop.max_depth < 0) {
    throw Error(ErrorKind::invalid_parameter, "max_depth must be nonnegative");
  }
  if (options.stop.min_diam && !(*options.stop.min_diam > 0.0)) {
    throw Error(ErrorKind::invalid_parameter, "min_diam must be positive");
  }
  if (root.dim != g.dim()) throw Error(ErrorKind::dimension, "root and grid dimensions differ");
  if (root.inverted() || !(root.volume() > 0.0)) {
    throw Error(ErrorKind::degenerate_box, "root box has zero volume");
  }
  const double lambda_eff = std::min(options.lambda, 2.0);
  const SummedTable t1(g);
  const SummedTable tp(g.pow(options.p));

  FiltrationTree tree;
  tree.family = TreeFamily::boxes;
  tree.lambda = options.lambda;
  tree.p = options.p;
  FiltrationNode r;
  r.box = root;
  node_stats(r, t1, tp, 0.0);
  tree.nodes.push_back(r);

  const auto is_leaf = [&](const FiltrationNode& n) {
    if (options.stop.max_depth && n.depth >= *options.stop.max_depth) return true;
    if (options.stop.min_diam && n.box.diameter() < *options.stop.min_diam) return true;
    return false;
  };
  std::vector<std::size_t> frontier{0};
  while (!frontier.empty()) {
    std::vector<std::size_t> split_nodes;
    for (std::size_t i : frontier) {
      if (!is_leaf(tree.nodes[i])) split_nodes.push_back(i);
    }
    if (tree.nodes.size() + 2 * split_nodes.size() > kMaxNodes) {
      throw Error(ErrorKind::configuration, "filtration exceeds the node limit");
    }
    std::vector<SplitResult> splits(split_nodes.size());
    parallel_for(0, split_nodes.size(), [&](std::size_t k) {
      splits[k] = split_box(t1, tree.nodes[split_nodes[k]].box, lambda_eff);
    });
    std::vector<std::size_t> next;
    for (std::size_t k = 0; k < split_nodes.size(); ++k) {
      const std::size_t parent = split_nodes[k];
      tree.nodes[parent].cut_axis = splits[k].cut.axis;
      tree.nodes[parent].cut_coord = splits[k].cut.coord;
      for (const Box* b : {&splits[k].minus, &splits[k].plus}) {
        FiltrationNode child;
        child.box = *b;
        child.parent = static_cast<long>(parent);
        child.depth = tree.nodes[parent].depth + 1;
        tree.nodes.push_back(child);
        const std::size_t id = tree.nodes.size() - 1;
        tree.nodes[parent].children.push_back(id);
        next.push_back(id);
      }
    }
    parallel_for(0, next.size(), [&](std::size_t k) {
      FiltrationNode& n = tree.nodes[next[k]];
      node_stats(n, t1, tp, tree.nodes[static_cast<std::size_t>(n.parent)].z);
    });
    frontier = std::move(next);
  }
  return tree;
}

FiltrationTree dyadic_filtration(const GridFunction& g, const Box& root, int levels, double p) {
  if (root.dim != g.dim()) throw Error(ErrorKind::dimension, "root and grid dimensions differ");
  if (root.inverted() || !(root.volume() > 0.0)) {
    throw Error(ErrorKind::degenerate_box, "root box has zero volume");
  }
  for (int a = 1; a < root.dim; ++a) {
    if (std::abs(root.side(a) - root.side(0)) > 1e-12 * root.side(0)) {
      throw Error(ErrorKind::alignment, "dyadic root must be a cube");
    }
  }
  if (levels < 0 || levels > 24 / root.dim) {
    throw Error(ErrorKind::invalid_parameter, "dyadic depth out of range");
  }
  if (!(p > 1.0)) throw Error(ErrorKind::invalid_exponent, "p must exceed 1");
  const SummedTable t1(g);
  const SummedTable tp(g.pow(p));
  FiltrationTree tree;
  tree.family = TreeFamily::dyadic;
  tree.lambda = std::ldexp(1.0, root.dim);
  tree.p = p;
  FiltrationNode r;
  r.box = root;
  node_stats(r, t1, tp, 0.0);
  tree.nodes.push_back(r);
  const std::size_t fan = std::size_t{1} << root.dim;
  std::size_t begin = 0, end = 1;
  for (int level = 0; level < levels; ++level) {
    for (std::size_t i = begin; i < end; ++i) {
      const Box parent = tree.nodes[i].box;
      for (std::size_t bits = 0; bits < fan; ++bits) {
        FiltrationNode child;
        child.box.dim = parent.dim;
        for (int a = 0; a < parent.dim; ++a) {
          const double mid = 0.5 * (parent.lo[a] + parent.hi[a]);
          const bool upper = (bits >> (parent.dim - 1 - a)) & 1U;
          child.box.lo[a] = upper ? mid : parent.lo[a];
          child.box.hi[a] = upper ? parent.hi[a] : mid;
        }
        child.parent = static_cast<long>(i);
        child.depth = level + 1;
        node_stats(child, t1, tp, tree.nodes[i].z);
        tree.nodes.push_back(child);
        tree.nodes[i].children.push_back(tree.nodes.size() - 1);
      }
    }
    begin = end;
    end = tree.nodes.size();
  }
  return tree;
}

bool DensityReport::passed() const {
  return std::all_of(items.begin(), items.end(), [](const DensityItem& i) { return i.passed; });
}

nlohmann::json DensityReport::to_json() const {
  nlohmann::json out = {{"passed", passed()}, {"max_volume_fraction", max_volume_fraction}};
  out["items"] = nlohmann::json::array();
  for (const auto& i : items) {
    out["items"].push_back({{"item", i.item},
                            {"name", i.name},
                            {"passed", i.passed},
                            {"worst", i.worst},
                            {"violations", i.violations},
                            {"detail", i.detail}});
  }
  return out;
}

DensityReport verify_density(const FiltrationTree& tree, const GridFunction& g, double lambda) {
  DensityReport report;
  const auto add = [&](int item, const char* name, double worst, std::size_t violations,
                       std::string detail = {}) {
    report.items.push_back(
        {item, name, violations == 0, worst, violations, std::move(detail)});
  };
  if (tree.nodes.empty()) {
    add(1, "root", 1.0, 1, "tree has no nodes");
    return report;
  }
  const auto& nodes = tree.nodes;
  const Box& root = nodes[0].box;
  const double root_volume = root.volume();
  const SummedTable table(g);

  {
    std::size_t bad = 0;
    if (nodes[0].parent != -1 || nodes[0].depth != 0) ++bad;
    for (std::size_t i = 1; i < nodes.size(); ++i) {
      if (nodes[i].parent < 0 || nodes[i].depth < 1) ++bad;
    }
    add(1, "root", static_cast<double>(bad), bad, "F_0 is the root alone");
  }
  {
    std::size_t bad = 0;
    for (const auto& n : nodes) {
      if (n.box.dim != root.dim || n.box.inverted() || !(n.box.volume() > 0.0)) ++bad;
      if (tree.family == TreeFamily::dyadic) {
        for (int a = 1; a < n.box.dim; ++a) {
          if (std::abs(n.box.side(a) - n.box.side(0)) > 1e-12 * n.box.side(0)) ++bad;
        }
      }
    }
    add(2, "family-members", static_cast<double>(bad), bad,
        "every node is a box of positive volume in the family");
  }
  const int depth = tree.depth();
  std::vector<double> sup_diam(static_cast<std::size_t>(depth) + 1, 0.0);
  {
    double worst = 0.0;
    std::size_t bad = 0;
    for (int m = 0; m <= depth; ++m) {
      long double total = 0.0L;
      for (std::size_t i : tree.level(m)) {
        total += nodes[i].box.volume();
        sup_diam[static_cast<std::size_t>(m)] =
            std::max(sup_diam[static_cast<std::size_t>(m)], nodes[i].box.diameter());
        if (!box_within(nodes[i].box, root, 1e-12)) ++bad;
      }
      const double err = std::abs(static_cast<double>(total) - root_volume) / root_volume;
      worst = std::max(worst, err);
      if (err > 1e-12) ++bad;
    }
    add(3, "covers-root", worst, bad, "each F_m tiles the root by volume");
  }
  {
    // Siblings pairwise almost disjoint and contained in their parent; with
    // exact tiling this makes every F_m almost disjoint.
    double worst = 0.0;
    std::size_t bad = 0;
    for (const auto& n : nodes) {
      const double v = n.box.volume();
      for (std::size_t a = 0; a < n.children.size(); ++a) {
        for (std::size_t b = a + 1; b < n.children.size(); ++b) {
          const double ov =
              nodes[n.children[a]].box.overlap_volume(nodes[n.children[b]].box) / v;
          worst = std::max(worst, ov);
          if (ov > 1e-12) ++bad;
        }
      }
    }
    add(4, "almost-disjoint", worst, bad, "sibling overlaps relative to the parent volume");
  }
  {
    double worst = 0.0;
    std::size_t bad = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto& n = nodes[i];
      if (n.children.empty()) continue;
      if (n.children.size() < 2) ++bad;
      long double total = 0.0L;
      for (std::size_t c : n.children) {
        const auto& ch = nodes[c];
        total += ch.box.volume();
        if (ch.parent != static_cast<long>(i) || ch.depth != n.depth + 1) ++bad;
        if (!box_within(ch.box, n.box, 1e-12)) ++bad;
      }
      const double err =
          std::abs(static_cast<double>(total) - n.box.volume()) / n.box.volume();
      worst = std::max(worst, err);
      if (err > 1e-12) ++bad;
    }
    add(5, "refinement", worst, bad, "children tile their parent");
  }
  {
    double worst = 0.0;
    std::size_t bad = 0;
    for (std::size_t m = 1; m < sup_diam.size(); ++m) {
      const double rise = (sup_diam[m] - sup_diam[m - 1]) / sup_diam[0];
      worst = std::max(worst, rise);
      if (rise > 1e-12) ++bad;
    }
    if (depth > 0 && !(sup_diam.back() < sup_diam.front())) ++bad;
    std::ostringstream detail;
    detail << "sup diameter " << sup_diam.front() << " -> " << sup_diam.back();
    add(6, "diameter-decay", worst, bad, detail.str());
  }
  {
    double worst = -INFINITY;
    std::size_t bad = 0;
    for (const auto& n : nodes) {
      if (n.children.empty()) continue;
      const double parent_avg = table.box_average(n.box);
      for (std::size_t c : n.children) {
        const double child_avg = table.box_average(nodes[c].box);
        double margin;
        if (parent_avg > 0.0) {
          margin = child_avg / parent_avg - lambda;
        } else {
          margin = child_avg > 0.0 ? INFINITY : -lambda;
        }
        worst = std::max(worst, margin);
        if (margin > 1e-9 * lambda) ++bad;
      }
    }
    if (!std::isfinite(worst) && worst < 0.0) worst = 0.0;
    add(7, "average-bound", worst, bad, "max child/parent average ratio minus lambda");
  }
  {
    const double lambda_eff = std::min(lambda, 2.0);
    double worst = -INFINITY;
    std::size_t bad = 0;
    for (const auto& n : nodes) {
      for (std::size_t c : n.children) {
        const double frac = nodes[c].box.volume() / n.box.volume();
        report.max_volume_fraction = std::max(report.max_volume_fraction, frac);
        worst = std::max(worst, frac - 1.0 / lambda_eff);
        if (frac > 1.0 / lambda_eff + 1e-12) ++bad;
      }
    }
    if (!std::isfinite(worst)) worst = 0.0;
    add(8, "volume-fraction", worst, bad, "max child volume fraction minus 1/lambda_eff");
  }
  return report;
}

}  // namespace maxlab
