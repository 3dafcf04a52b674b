#include "maxlab/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "maxlab/bellman.hpp"
#include "maxlab/covering.hpp"
#include "maxlab/error.hpp"
#include "maxlab/parallel.hpp"

namespace maxlab {

namespace {

GridFunction refined(const GridFunction& g, int refine) {
  if (refine == 1) return g;
  const auto r = static_cast<std::size_t>(refine);
  std::vector<std::size_t> shape = g.shape();
  for (auto& n : shape) n *= r;
  GridFunction out = GridFunction::zeros(shape, g.origin(), g.cell_size() / refine);
  std::vector<double> v(out.size());
  for (std::size_t c = 0; c < out.size(); ++c) {
    Index idx = out.unflatten(c);
    for (int a = 0; a < g.dim(); ++a) idx[a] /= r;
    v[c] = g.at(idx);
  }
  return out.with_values(std::move(v));
}

GridFunction padded(const GridFunction& g, std::size_t margin) {
  if (margin == 0) return g;
  std::vector<std::size_t> shape = g.shape();
  Point origin = g.origin();
  for (int a = 0; a < g.dim(); ++a) {
    shape[a] += 2 * margin;
    origin[a] -= static_cast<double>(margin) * g.cell_size();
  }
  GridFunction out = GridFunction::zeros(shape, origin, g.cell_size());
  std::vector<double> v(out.size(), 0.0);
  for (std::size_t c = 0; c < g.size(); ++c) {
    Index idx = g.unflatten(c);
    for (int a = 0; a < g.dim(); ++a) idx[a] += margin;
    v[out.flat(idx)] = g[c];
  }
  return out.with_values(std::move(v));
}

// Bounding box of the cells where f > 0.
std::optional<Box> support_box(const GridFunction& g) {
  std::optional<Box> out;
  for (std::size_t c = 0; c < g.size(); ++c) {
    if (!(g[c] > 0.0)) continue;
    const Box cell = g.cell_box(c);
    if (!out) {
      out = cell;
      continue;
    }
    for (int a = 0; a < g.dim(); ++a) {
      out->lo[a] = std::min(out->lo[a], cell.lo[a]);
      out->hi[a] = std::max(out->hi[a], cell.hi[a]);
    }
  }
  return out;
}

int dyadic_levels(const GridFunction& g) {
  const std::size_t n = g.extent(0);
  for (int a = 1; a < g.dim(); ++a) {
    if (g.extent(a) != n) throw Error(ErrorKind::alignment, "dyadic ratio needs a cubic grid");
  }
  if (n == 0 || (n & (n - 1)) != 0) {
    throw Error(ErrorKind::alignment, "dyadic ratio needs a power of two cells per axis");
  }
  int levels = 0;
  while ((std::size_t{1} << levels) < n) ++levels;
  return levels;
}

void check_p(double p) {
  if (!(p > 1.0) || !std::isfinite(p)) throw Error(ErrorKind::invalid_exponent, "p must exceed 1");
}

}  // namespace

RatioOperator RatioOperator::uncentered_box() {
  RatioOperator op;
  op.spec.lambda = 1.0;
  return op;
}

RatioOperator RatioOperator::dyadic_cubes() {
  RatioOperator op;
  op.kind = OperatorKind::dyadic;
  return op;
}

RatioOperator RatioOperator::one_sided_right() {
  RatioOperator op;
  op.kind = OperatorKind::one_sided;
  return op;
}

std::string RatioOperator::describe() const {
  switch (kind) {
    case OperatorKind::dyadic: return "dyadic";
    case OperatorKind::one_sided: return "one-sided";
    case OperatorKind::lambda_body: break;
  }
  return spec.describe();
}

ReferenceConstant reference_constant(const RatioOperator& op, int dim, double p) {
  check_p(p);
  const TheoremConstants k = theorem_constants(p, std::ldexp(1.0, dim), dim);
  switch (op.kind) {
    case OperatorKind::dyadic: return {k.dyadic, "dyadic"};
    case OperatorKind::one_sided: return {k.limit, "one-sided"};
    case OperatorKind::lambda_body: break;
  }
  if (op.spec.lambda < 1.0) return {1.0, "pointwise"};
  if (dim == 1 || op.spec.family == BodyKind::box || op.spec.family == BodyKind::ball_inf) {
    return {k.limit, "parallelepipeds"};
  }
  return {uncentered_constant(p, std::pow(5.0, dim)), "convex-bodies"};
}

nlohmann::json RatioReport::to_json() const {
  nlohmann::json out = {{"p", p},
                        {"operator", op},
                        {"norm_f", norm_f},
                        {"norm_Mf", norm_mf},
                        {"ratio", ratio},
                        {"tail_estimate", tail_estimate},
                        {"ratio_with_tail", ratio_with_tail},
                        {"constant", constant.value},
                        {"constant_name", constant.name},
                        {"margin", margin},
                        {"domain", maxlab::to_json(domain)},
                        {"shape", shape},
                        {"cell_size", cell_size}};
  out["truncation_radius"] =
      truncation_radius ? nlohmann::json(*truncation_radius) : nlohmann::json(nullptr);
  return out;
}

RatioReport ratio(const GridFunction& g, const RatioOperator& op, double p,
                  const RatioOptions& options) {
  check_p(p);
  if (options.refine < 1) throw Error(ErrorKind::invalid_parameter, "refine must be at least 1");
  RatioReport r;
  r.p = p;
  r.op = op.describe();
  r.shape = g.shape();
  r.cell_size = g.cell_size();
  r.constant = reference_constant(op, g.dim(), p);
  r.norm_f = lp_norm(g, p);
  if (!(r.norm_f > 0.0)) throw Error(ErrorKind::degenerate_input, "f is zero");
  const std::optional<Box> support = support_box(g);

  GridFunction domain_grid = g;
  MaximalField field = [&] {
    switch (op.kind) {
      case OperatorKind::dyadic:
        return dyadic_maximal(g, g.bounds(), dyadic_levels(g));
      case OperatorKind::one_sided:
        domain_grid = padded(refined(g, options.refine),
                             options.margin_cells * static_cast<std::size_t>(options.refine));
        return one_sided_maximal(domain_grid);
      case OperatorKind::lambda_body: break;
    }
    domain_grid = padded(refined(g, options.refine),
                         options.margin_cells * static_cast<std::size_t>(options.refine));
    return lambda_maximal(domain_grid, op.spec);
  }();
  r.domain = domain_grid.bounds();
  r.norm_mf = lp_norm(field.values, p);
  r.ratio = r.norm_mf / r.norm_f;

  if (op.kind != OperatorKind::dyadic) {
    double radius = std::numeric_limits<double>::infinity();
    for (int a = 0; a < g.dim(); ++a) {
      radius = std::min({radius, support->lo[a] - r.domain.lo[a], r.domain.hi[a] - support->hi[a]});
    }
    r.truncation_radius = radius;
  }
  // Outside the domain M f(x) >= ||f||_1 / |R(x)| where R(x) is the smallest
  // box holding x and the support. |R(x)| is a product over axes, so the tail
  // integral is a difference of products of one-dimensional integrals.
  const bool box_family = op.kind == OperatorKind::lambda_body && op.spec.lambda == 1.0 &&
                          (g.dim() == 1 || op.spec.family == BodyKind::box ||
                           op.spec.family == BodyKind::ball_inf);
  if (box_family || (op.kind == OperatorKind::one_sided && g.dim() == 1)) {
    double whole = 1.0, inside = 1.0;
    for (int a = 0; a < g.dim(); ++a) {
      const double side = support->hi[a] - support->lo[a];
      const double core = std::pow(side, 1.0 - p);
      const double left = (core - std::pow(support->hi[a] - r.domain.lo[a], 1.0 - p)) / (p - 1.0);
      const double right = (core - std::pow(r.domain.hi[a] - support->lo[a], 1.0 - p)) / (p - 1.0);
      if (op.kind == OperatorKind::one_sided) {
        // M_R f vanishes right of the support.
        whole *= core * (1.0 + 1.0 / (p - 1.0));
        inside *= core + left;
      } else {
        whole *= core * (1.0 + 2.0 / (p - 1.0));
        inside *= core + left + right;
      }
    }
    r.tail_estimate = std::pow(g.integral(), p) * std::max(0.0, whole - inside);
  }
  if (op.kind == OperatorKind::dyadic) {
    // On the shell of the ancestor [0, 2^m L)^n outside [0, 2^(m-1) L)^n the
    // only cubes with mass are ancestors, so M f = mass / (2^m L)^n exactly.
    const int n = g.dim();
    const double side = r.domain.side(0);
    const double q = std::pow(2.0, n * (1.0 - p));
    r.tail_estimate = std::pow(g.integral(), p) * std::pow(side, n * (1.0 - p)) *
                      (1.0 - std::ldexp(1.0, -n)) * q / (1.0 - q);
  }
  r.ratio_with_tail = std::pow(std::pow(r.norm_mf, p) + r.tail_estimate, 1.0 / p) / r.norm_f;
  r.margin = r.ratio_with_tail - r.constant.value;
  return r;
}

nlohmann::json SearchResult::to_json() const {
  nlohmann::json t = nlohmann::json::array();
  for (const auto& [step, value] : trace) t.push_back({step, value});
  return {{"seed", seed}, {"best_objective", best_objective}, {"report", report.to_json()},
          {"trace", t}};
}

std::string SearchResult::trace_tsv() const {
  std::ostringstream os;
  os.precision(12);
  os << "step\tratio\n";
  for (const auto& [step, value] : trace) os << step << '\t' << value << '\n';
  return os.str();
}

SearchResult minimize_ratio(const RatioOperator& op, double p, const std::vector<std::size_t>& shape,
                            const AnnealOptions& options, std::uint64_t seed) {
  check_p(p);
  if (shape.empty() || shape.size() > static_cast<std::size_t>(kMaxDim) ||
      std::any_of(shape.begin(), shape.end(), [](std::size_t n) { return n == 0; })) {
    throw Error(ErrorKind::configuration, "search shape must have 1 to 3 positive extents");
  }
  if (options.steps == 0) throw Error(ErrorKind::configuration, "search budget must be positive");
  if (!(options.t_start > 0.0 && options.t_end > 0.0 && options.sigma > 0.0)) {
    throw Error(ErrorKind::configuration, "annealing constants must be positive");
  }
  const double h = 1.0 / static_cast<double>(shape[0]);
  GridFunction grid = GridFunction::zeros(shape, {}, h);
  const std::size_t n = grid.size();
  RatioOptions ro;
  ro.margin_cells = options.margin_cells > 0 ? options.margin_cells : std::max<std::size_t>(1, shape[0] / 4);
  const auto objective = [&](const std::vector<double>& v) {
    return ratio(grid.with_values(v), op, p, ro).ratio_with_tail;
  };

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::uniform_int_distribution<int> pick_axis(0, grid.dim() - 1);

  std::vector<double> cur(n, 1.0);
  double cur_value = objective(cur);
  std::vector<double> best = cur;
  double best_value = cur_value;
  SearchResult out{seed, grid, {}, 0.0, {{0, best_value}}};

  const double cooling = std::log(options.t_end / options.t_start);
  std::vector<double> next;
  for (std::size_t step = 1; step <= options.steps; ++step) {
    const double temperature =
        options.t_start * std::exp(cooling * static_cast<double>(step) / static_cast<double>(options.steps));
    next = cur;
    const std::size_t i = pick(rng);
    const double u = unit(rng);
    if (u < options.grow_probability) {
      // Copy a perturbed neighbour value, which can extend the support.
      Index idx = grid.unflatten(i);
      const int axis = pick_axis(rng);
      const bool up = unit(rng) < 0.5;
      if (up && idx[axis] + 1 < grid.extent(axis)) {
        ++idx[axis];
      } else if (!up && idx[axis] > 0) {
        --idx[axis];
      }
      next[i] = next[grid.flat(idx)] * std::exp(options.sigma * normal(rng));
    } else if (u < 1.5 * options.grow_probability) {
      next[i] = 0.0;
    } else {
      next[i] *= std::exp(options.sigma * normal(rng));
    }
    if (std::none_of(next.begin(), next.end(), [](double x) { return x > 0.0; })) continue;
    const double value = objective(next);
    if (value <= cur_value || unit(rng) < std::exp((cur_value - value) / temperature)) {
      const double norm = lp_norm(grid.with_values(next), p);
      for (auto& x : next) x /= norm;
      cur.swap(next);
      cur_value = value;
      if (cur_value < best_value) {
        best = cur;
        best_value = cur_value;
        out.trace.push_back({step, best_value});
      }
    }
  }
  out.best = grid.with_values(best);
  out.best_objective = best_value;
  RatioOptions certify;
  certify.refine = options.certify_refine;
  certify.margin_cells =
      options.certify_margin_cells > 0 ? options.certify_margin_cells : 4 * shape[0];
  out.report = ratio(out.best, op, p, certify);
  return out;
}

std::vector<SearchResult> minimize_ratio_chains(const RatioOperator& op, double p,
                                                const std::vector<std::size_t>& shape,
                                                const AnnealOptions& options,
                                                const std::vector<std::uint64_t>& seeds) {
  std::vector<std::optional<SearchResult>> results(seeds.size());
  parallel_for(0, seeds.size(), [&](std::size_t k) {
    results[k] = minimize_ratio(op, p, shape, options, seeds[k]);
  });
  std::vector<SearchResult> out;
  for (auto& r : results) out.push_back(std::move(*r));
  return out;
}

nlohmann::json GrafakosReport::to_json() const {
  nlohmann::json rs = nlohmann::json::array();
  for (const auto& row : rows) {
    rs.push_back({{"t", row.t}, {"lhs", row.lhs}, {"rhs", row.rhs}, {"residual", row.residual}});
  }
  return {{"rows", rs}, {"max_residual", max_residual}};
}

GrafakosReport grafakos_check(const GridFunction& g, const std::vector<double>& t_grid) {
  if (g.dim() != 1) throw Error(ErrorKind::dimension, "the level identity is one dimensional");
  const double mass = g.integral();
  const double diam = static_cast<double>(g.size()) * g.cell_size();
  GrafakosReport r;
  for (double t : t_grid) {
    if (!(t > 0.0)) throw Error(ErrorKind::invalid_level, "levels must be positive");
    const OneSidedLevelSet set = one_sided_superlevel(g, t);
    long double inside = 0.0L;
    for (std::size_t c = 0; c < g.size(); ++c) {
      inside += static_cast<long double>(set.cell_measure[c]) * g[c];
    }
    GrafakosRow row;
    row.t = t;
    row.lhs = t * set.total();
    row.rhs = static_cast<double>(inside);
    const double scale = std::max({row.lhs, row.rhs, mass * t / diam});
    row.residual = scale > 0.0 ? std::abs(row.lhs - row.rhs) / scale : 0.0;
    r.max_residual = std::max(r.max_residual, row.residual);
    r.rows.push_back(row);
  }
  return r;
}

nlohmann::json AlmostCenteredBound::to_json() const {
  nlohmann::json out = {{"numerator", numerator}, {"denominator", denominator}};
  out["A_power_p"] = power ? nlohmann::json(*power) : nlohmann::json(nullptr);
  out["A"] = constant ? nlohmann::json(*constant) : nlohmann::json(nullptr);
  if (!diagnostic.empty()) out["diagnostic"] = diagnostic;
  return out;
}

AlmostCenteredBound almost_centered_bound(int n, double p, double lambda, double eps, double eta,
                                          double besicovitch) {
  if (!(lambda > 0.0 && lambda < 1.0)) {
    throw Error(ErrorKind::invalid_parameter, "lambda must lie in (0, 1)");
  }
  check_p(p);
  if (n < 1) throw Error(ErrorKind::dimension, "n must be positive");
  if (!(eps > 0.0 && eps < 1.0)) throw Error(ErrorKind::invalid_parameter, "eps must lie in (0, 1)");
  if (!(eta > 0.0)) throw Error(ErrorKind::invalid_parameter, "eta must be positive");
  if (!(besicovitch > 0.0)) throw Error(ErrorKind::invalid_parameter, "B must be positive");
  const double shrink = std::pow(1.0 - eps, -n - p);
  AlmostCenteredBound r;
  r.numerator = 1.0 - shrink + 1.0 / (besicovitch * (p - 1.0));
  r.denominator = p / (eta * (p - 1.0) * std::pow(lambda, -n * (p - 1.0))) + shrink;
  if (!(r.numerator > 0.0)) {
    std::ostringstream os;
    os << "eps too large: 1 - (1 - eps)^(-n-p) + 1/(B (p - 1)) = " << r.numerator << " <= 0";
    r.diagnostic = os.str();
    return r;
  }
  r.power = 1.0 + r.numerator / r.denominator;
  r.constant = std::pow(*r.power, 1.0 / p);
  return r;
}

}  // namespace maxlab
