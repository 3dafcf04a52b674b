#include "maxlab/covering.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "maxlab/error.hpp"
#include "maxlab/parallel.hpp"

namespace maxlab {

namespace {

Body scaled_body(BodyKind kind, int dim, const Point& center, double half_width) {
  Body b;
  b.kind = kind;
  b.dim = dim;
  b.center = center;
  for (int a = 0; a < dim; ++a) b.half_widths[a] = half_width;
  return b;
}

// Cell index ranges whose cells may hold centers inside the body.
void cell_range(const GridFunction& g, const Box& box, Index& lo, Index& hi) {
  const double h = g.cell_size();
  lo = {0, 0, 0};
  hi = {1, 1, 1};
  for (int a = 0; a < g.dim(); ++a) {
    const double o = g.origin()[a];
    const auto n = static_cast<long>(g.extent(a));
    lo[a] = static_cast<std::size_t>(
        std::clamp<long>(static_cast<long>(std::floor((box.lo[a] - o) / h - 0.5)), 0, n));
    hi[a] = static_cast<std::size_t>(
        std::clamp<long>(static_cast<long>(std::ceil((box.hi[a] - o) / h + 0.5)), 0, n));
  }
}

template <typename Fn>
void for_cells_in(const GridFunction& g, const Body& body, Fn&& fn) {
  Index lo, hi;
  cell_range(g, body.bounding_box(), lo, hi);
  for (std::size_t i = lo[0]; i < hi[0]; ++i) {
    for (std::size_t j = lo[1]; j < hi[1]; ++j) {
      for (std::size_t k = lo[2]; k < hi[2]; ++k) {
        const std::size_t c = g.flat({i, j, k});
        if (body.contains(g.cell_center(c))) fn(c);
      }
    }
  }
}

std::size_t box_depth(std::vector<const Box*> boxes, int axis, int dim) {
  if (boxes.empty()) return 0;
  if (axis == dim - 1) {
    std::vector<std::pair<double, int>> events;
    events.reserve(2 * boxes.size());
    for (const Box* b : boxes) {
      events.push_back({b->lo[axis], 0});   // openings sort first: closed boxes
      events.push_back({b->hi[axis], 1});
    }
    std::sort(events.begin(), events.end());
    std::size_t cur = 0, best = 0;
    for (const auto& e : events) {
      if (e.second == 0) {
        best = std::max(best, ++cur);
      } else {
        --cur;
      }
    }
    return best;
  }
  std::vector<double> cands;
  for (const Box* b : boxes) cands.push_back(b->lo[axis]);
  std::sort(cands.begin(), cands.end());
  cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
  std::size_t best = 0;
  std::vector<const Box*> subset;
  for (double c : cands) {
    subset.clear();
    for (const Box* b : boxes) {
      if (b->lo[axis] <= c && c <= b->hi[axis]) subset.push_back(b);
    }
    if (subset.size() <= best) continue;
    best = std::max(best, box_depth(subset, axis + 1, dim));
  }
  return best;
}

void check_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorKind::invalid_parameter, "delta must lie in (0, 1)");
}

}  // namespace

std::vector<Body> level_family(const GridFunction& g, double t, const LevelFamilyOptions& options) {
  if (!(t > 0.0) || !std::isfinite(t)) throw Error(ErrorKind::invalid_level, "level t must be positive");
  check_delta(options.delta);
  if (!(options.ratio > 1.0)) throw Error(ErrorKind::invalid_parameter, "scan ratio must exceed 1");
  const SummedTable table(g);
  const double h = g.cell_size();
  // Bodies are refined to half the tolerance so that property checks with a
  // (1 + delta) slack are not decided by the refinement error.
  const double tol = 0.5 * options.delta * t;
  std::vector<std::optional<Body>> found(g.size());
  parallel_for(0, g.size(), [&](std::size_t c) {
    if (!(g[c] > t)) return;
    const Point x = g.cell_center(c);
    const auto avg = [&](double s) {
      return table.body_average(scaled_body(options.family, g.dim(), x, 0.5 * h * s),
                                options.subsample);
    };
    double s_in = 1.0, s = 1.0;
    double ps = avg(s);
    if (ps <= t) return;  // the starting body does not reach above t
    while (ps > t) {
      s_in = s;
      s *= options.ratio;
      ps = avg(s);
    }
    if (std::abs(ps - t) > tol) {
      double lo = s_in, hi = s;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double pm = avg(mid);
        s = mid;
        ps = pm;
        if (std::abs(pm - t) <= tol) break;
        if (pm > t) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      if (std::abs(ps - t) > tol) {
        throw Error(ErrorKind::consistency, "level bisection did not converge");
      }
    }
    found[c] = scaled_body(options.family, g.dim(), x, 0.5 * h * s);
  });
  std::vector<Body> out;
  for (auto& b : found) {
    if (b) out.push_back(*b);
  }
  return out;
}

std::vector<std::size_t> besicovitch_indices(const std::vector<Body>& bodies) {
  std::vector<std::size_t> order(bodies.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> volume(bodies.size());
  for (std::size_t i = 0; i < bodies.size(); ++i) volume[i] = bodies[i].volume();
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return volume[a] > volume[b]; });
  std::vector<std::size_t> selected;
  for (std::size_t i : order) {
    const Point& c = bodies[i].center;
    const bool covered = std::any_of(selected.begin(), selected.end(),
                                     [&](std::size_t s) { return bodies[s].contains(c); });
    if (!covered) selected.push_back(i);
  }
  return selected;
}

std::vector<Body> besicovitch_extract(const std::vector<Body>& bodies) {
  std::vector<Body> out;
  for (std::size_t i : besicovitch_indices(bodies)) out.push_back(bodies[i]);
  return out;
}

std::size_t max_overlap(const std::vector<Body>& bodies) {
  if (bodies.empty()) return 0;
  const bool boxes = std::all_of(bodies.begin(), bodies.end(), [](const Body& b) {
    return b.kind == BodyKind::box || b.kind == BodyKind::ball_inf;
  });
  if (boxes) {
    std::vector<Box> bb;
    bb.reserve(bodies.size());
    for (const auto& b : bodies) bb.push_back(b.bounding_box());
    std::vector<const Box*> ptrs;
    for (const auto& b : bb) ptrs.push_back(&b);
    return box_depth(ptrs, 0, bodies.front().dim);
  }
  std::size_t best = 0;
  for (const auto& b : bodies) {
    std::size_t n = 0;
    for (const auto& o : bodies) n += o.contains(b.center) ? 1 : 0;
    best = std::max(best, n);
  }
  return best;
}

GridFunction psi_field(const GridFunction& g, const std::vector<Body>& bodies) {
  std::vector<double> v(g.size(), 0.0);
  for (const auto& b : bodies) {
    if (b.dim != g.dim()) throw Error(ErrorKind::dimension, "body and grid dimensions differ");
    for_cells_in(g, b, [&](std::size_t c) { v[c] += 1.0; });
  }
  return g.with_values(std::move(v));
}

nlohmann::json PsiReport::to_json() const {
  return {{"t", t},
          {"delta", delta},
          {"selected", selected},
          {"bound", bound},
          {"max_psi", max_psi},
          {"max_overlap", max_overlap},
          {"prop1", prop1},
          {"prop2", prop2},
          {"prop2_worst", prop2_worst},
          {"prop2_violations", prop2_violations},
          {"prop3", prop3},
          {"prop3_worst", prop3_worst},
          {"prop3_violations", prop3_violations},
          {"prop4", prop4},
          {"prop4_residual", prop4_residual},
          {"passed", passed()}};
}

std::string PsiReport::csv_header() {
  return "t,selected,max_psi,prop2_worst,prop3_worst,prop4_residual";
}

std::string PsiReport::csv_row() const {
  std::ostringstream os;
  os.precision(10);
  os << t << ',' << selected << ',' << max_psi << ',' << prop2_worst << ',' << prop3_worst << ','
     << prop4_residual;
  return os.str();
}

nlohmann::json LevelSetCover::to_json() const {
  nlohmann::json out = {{"t", t}, {"delta", delta}, {"report", report.to_json()}};
  out["selected"] = nlohmann::json::array();
  for (const auto& b : selected) out["selected"].push_back(maxlab::to_json(b));
  return out;
}

LevelSetCover build_psi(const GridFunction& g, double t, std::vector<Body> selected, double delta,
                        const MaximalField& m1, int subsample) {
  if (!(t > 0.0)) throw Error(ErrorKind::invalid_level, "level t must be positive");
  check_delta(delta);
  if (!m1.values.same_lattice(g)) {
    throw Error(ErrorKind::configuration, "maximal field lives on a different grid");
  }
  LevelSetCover cover{t, delta, {}, psi_field(g, selected), {}};
  PsiReport& r = cover.report;
  r.t = t;
  r.delta = delta;
  r.selected = selected.size();
  r.bound = std::pow(5.0, g.dim());
  r.max_psi = cover.psi.max_value();
  r.max_overlap = max_overlap(selected);
  r.prop1 = r.max_psi <= r.bound && static_cast<double>(r.max_overlap) <= r.bound;
  for (std::size_t c = 0; c < g.size(); ++c) {
    const double psi = cover.psi[c];
    if (t > m1.values[c] * (1.0 + delta) && psi > 0.0) {
      ++r.prop2_violations;
      r.prop2_worst = std::max(r.prop2_worst, psi);
    }
    if (g[c] > t * (1.0 + delta) && psi < 1.0) {
      ++r.prop3_violations;
      r.prop3_worst = std::max(r.prop3_worst, g[c] / t);
    }
  }
  r.prop2 = r.prop2_violations == 0;
  r.prop3 = r.prop3_violations == 0;
  const SummedTable table(g);
  long double vol = 0.0L, mass = 0.0L;
  for (const auto& b : selected) {
    const auto q = table.body_quadrature(b, subsample);
    vol += q.volume;
    mass += q.mass;
  }
  if (vol > 0.0L) {
    r.prop4_residual = static_cast<double>(std::abs(t * vol - mass) / (t * vol));
  }
  r.prop4 = r.prop4_residual <= delta;
  cover.selected = std::move(selected);
  return cover;
}

LevelSetCover cover_level(const GridFunction& g, double t, const LevelFamilyOptions& options,
                          const MaximalField& m1) {
  return build_psi(g, t, besicovitch_extract(level_family(g, t, options)), options.delta, m1,
                   options.subsample);
}

std::string to_string(Dichotomy d) {
  switch (d) {
    case Dichotomy::expansion: return "expansion";
    case Dichotomy::spread: return "spread";
    case Dichotomy::both: return "both";
    case Dichotomy::neither: break;
  }
  return "neither";
}

nlohmann::json DichotomyResult::to_json() const {
  return {{"verdict", to_string(verdict)},   {"integral_f", integral_f},
          {"integral_m", integral_m},         {"expansion_ratio", expansion_ratio},
          {"spread_min", spread_min},         {"spread_cells", spread_cells}};
}

DichotomyResult dichotomy_check(const GridFunction& g, const Body& K, double lambda, double eps,
                                double eta, const std::optional<MaximalField>& field) {
  K.validate();
  if (K.dim != g.dim()) throw Error(ErrorKind::dimension, "body and grid dimensions differ");
  if (!(eps > 0.0 && eps < 1.0)) throw Error(ErrorKind::invalid_parameter, "eps must lie in (0, 1)");
  if (!(eta > 0.0)) throw Error(ErrorKind::invalid_parameter, "eta must be positive");
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw Error(ErrorKind::invalid_parameter, "lambda must lie in [0, 1]");
  }
  MaximalField m = [&] {
    if (field) {
      if (!field->values.same_lattice(g)) {
        throw Error(ErrorKind::configuration, "maximal field lives on a different grid");
      }
      return *field;
    }
    OperatorSpec spec;
    spec.family = K.kind;
    spec.lambda = lambda;
    spec.mode = SearchMode::ladder;
    double widest = 0.0;
    for (int a = 0; a < K.dim; ++a) widest = std::max(widest, K.half_widths[a]);
    spec.ladder.max_scale = std::max(2.0 * widest, 0.5 * g.cell_size());
    return lambda_maximal(g, spec);
  }();
  DichotomyResult r;
  const auto qf = SummedTable(g).body_quadrature(K);
  const auto qm = SummedTable(m.values).body_quadrature(K);
  r.integral_f = qf.mass;
  r.integral_m = qm.mass;
  r.expansion_ratio = qf.mass > 0.0 ? qm.mass / qf.mass : INFINITY;
  const bool expansion = qm.mass >= (1.0 + eta) * qf.mass;
  const double avg = qf.average();
  r.spread_min = INFINITY;
  for_cells_in(g, K.dilate(1.0 - eps), [&](std::size_t c) {
    ++r.spread_cells;
    r.spread_min = std::min(r.spread_min, avg > 0.0 ? m.values[c] / avg : INFINITY);
  });
  const bool spread = r.spread_cells == 0 || r.spread_min >= 1.0 - eps;
  if (expansion && spread) {
    r.verdict = Dichotomy::both;
  } else if (expansion) {
    r.verdict = Dichotomy::expansion;
  } else if (spread) {
    r.verdict = Dichotomy::spread;
  } else {
    r.verdict = Dichotomy::neither;
  }
  return r;
}

nlohmann::json PsiSplit::to_json() const {
  return {{"expanding", expanding.size()},
          {"spreading", spreading.size()},
          {"neither", neither},
          {"vanishing_violations", vanishing_violations},
          {"field_only_violations", field_only_violations},
          {"max_scaling_error", max_scaling_error}};
}

PsiSplit split_psi(const GridFunction& g, const LevelSetCover& cover, double lambda, double eps,
                   double eta, const MaximalField& m_lambda) {
  if (!(lambda > 0.0 && lambda < 1.0)) {
    throw Error(ErrorKind::invalid_parameter, "lambda must lie in (0, 1)");
  }
  if (!m_lambda.values.same_lattice(g)) {
    throw Error(ErrorKind::configuration, "maximal field lives on a different grid");
  }
  PsiSplit out{{}, {}, 0, g, g, g, 0, 0, 0.0};
  std::vector<Body> k1, k2, k2_eps;
  for (std::size_t i = 0; i < cover.selected.size(); ++i) {
    const Body& K = cover.selected[i];
    const DichotomyResult d = dichotomy_check(g, K, lambda, eps, eta, m_lambda);
    if (d.verdict == Dichotomy::expansion || d.verdict == Dichotomy::both) {
      out.expanding.push_back(i);
      k1.push_back(K);
    } else {
      if (d.verdict == Dichotomy::neither) ++out.neither;
      out.spreading.push_back(i);
      k2.push_back(K);
      const Body shrunk = K.dilate(1.0 - eps);
      k2_eps.push_back(shrunk);
      const double expect = std::pow(1.0 - eps, K.dim) * K.volume();
      out.max_scaling_error =
          std::max(out.max_scaling_error, std::abs(shrunk.volume() / expect - 1.0));
    }
  }
  out.psi1 = psi_field(g, k1);
  out.psi2 = psi_field(g, k2);
  out.psi2_eps = psi_field(g, k2_eps);
  // x in K' gives M_lambda f(x) >= <f>_{K'/lambda} >= lambda^n t.
  const SummedTable table(g);
  std::vector<double> witness(g.size(), 0.0);
  for (const Body& K : k1) {
    const double avg = table.body_average(K.dilate(1.0 / lambda));
    for_cells_in(g, K, [&](std::size_t c) { witness[c] = std::max(witness[c], avg); });
  }
  const double scale = std::pow(lambda, -g.dim());
  const double t = cover.t;
  for (std::size_t c = 0; c < g.size(); ++c) {
    if (out.psi1[c] <= 0.0) continue;
    const double field_value = m_lambda.values[c];
    if (t > scale * field_value * (1.0 + cover.delta)) ++out.field_only_violations;
    if (t > scale * std::max(field_value, witness[c]) * (1.0 + cover.delta)) {
      ++out.vanishing_violations;
    }
  }
  return out;
}

nlohmann::json SteinResult::to_json() const {
  return {{"lhs", lhs}, {"rhs", rhs}, {"empirical_C", empirical_c}, {"scale", scale}};
}

SteinResult stein_check(const GridFunction& g, const Body& K0) {
  K0.validate();
  if (K0.dim != g.dim()) throw Error(ErrorKind::dimension, "body and grid dimensions differ");
  std::vector<std::size_t> inside;
  for_cells_in(g, K0, [&](std::size_t c) { inside.push_back(c); });
  long double mass = 0.0L;
  for (std::size_t c : inside) mass += g[c];
  if (inside.empty() || !(mass > 0.0L)) {
    throw Error(ErrorKind::degenerate_input, "f has no mass in K0");
  }
  SteinResult r;
  r.scale = static_cast<double>(static_cast<long double>(inside.size()) / mass);
  std::vector<double> v(g.size(), 0.0);
  for (std::size_t c : inside) v[c] = g[c] * r.scale;
  const GridFunction f = g.with_values(std::move(v));
  OperatorSpec spec;
  spec.family = K0.kind;
  spec.lambda = 0.0;
  spec.mode = SearchMode::ladder;
  const MaximalField m = lambda_maximal(f, spec);
  const double cell = g.cell_volume();
  long double lhs = 0.0L, rhs = 0.0L;
  for (std::size_t c : inside) {
    lhs += f[c] * std::log(std::max(1.0, f[c]));
    rhs += m.values[c];
  }
  r.lhs = static_cast<double>(lhs * cell);
  r.rhs = static_cast<double>(rhs * cell);
  r.empirical_c = r.lhs / r.rhs;
  return r;
}

double uncentered_constant(double p, double besicovitch) {
  if (!(p > 1.0)) throw Error(ErrorKind::invalid_exponent, "p must exceed 1");
  if (!(besicovitch > 0.0)) throw Error(ErrorKind::invalid_parameter, "B must be positive");
  return std::pow(1.0 + 1.0 / ((p - 1.0) * besicovitch), 1.0 / p);
}

nlohmann::json LayerCakeReport::to_json() const {
  nlohmann::json out = {{"p", p},          {"lhs", lhs},
                        {"rhs", rhs},      {"rel_diff", rel_diff},
                        {"B", besicovitch}, {"A_p_n_1", constant}};
  out["rows"] = nlohmann::json::array();
  for (const auto& row : rows) {
    out["rows"].push_back(
        {{"t", row.t}, {"selected", row.selected}, {"lhs", row.lhs}, {"rhs", row.rhs}});
  }
  return out;
}

LayerCakeReport layer_cake_report(const GridFunction& g, double p, const std::vector<double>& t_grid,
                                  const LevelFamilyOptions& options,
                                  std::optional<double> besicovitch) {
  if (t_grid.empty()) throw Error(ErrorKind::configuration, "empty level ladder");
  if (!(p > 1.0)) throw Error(ErrorKind::invalid_exponent, "p must exceed 1");
  for (double t : t_grid) {
    if (!(t > 0.0)) throw Error(ErrorKind::invalid_level, "levels must be positive");
  }
  LayerCakeReport r;
  r.p = p;
  r.besicovitch = besicovitch.value_or(std::pow(5.0, g.dim()));
  r.constant = uncentered_constant(p, r.besicovitch);
  r.rows.resize(t_grid.size());
  const double cell = g.cell_volume();
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    const double t = t_grid[i];
    const std::vector<Body> selected = besicovitch_extract(level_family(g, t, options));
    const GridFunction psi = psi_field(g, selected);
    long double vol = 0.0L, weighted = 0.0L;
    for (const auto& b : selected) vol += b.volume();
    for (std::size_t c = 0; c < g.size(); ++c) weighted += psi[c] * g[c];
    LayerCakeRow& row = r.rows[i];
    row.t = t;
    row.selected = selected.size();
    row.lhs = std::pow(t, p - 1.0) * static_cast<double>(vol);
    row.rhs = std::pow(t, p - 2.0) * static_cast<double>(weighted) * cell;
  }
  long double lhs = 0.0L, rhs = 0.0L;
  for (std::size_t i = 0; i + 1 < r.rows.size(); ++i) {
    const double dt = r.rows[i + 1].t - r.rows[i].t;
    lhs += 0.5 * dt * (r.rows[i].lhs + r.rows[i + 1].lhs);
    rhs += 0.5 * dt * (r.rows[i].rhs + r.rows[i + 1].rhs);
  }
  r.lhs = static_cast<double>(lhs);
  r.rhs = static_cast<double>(rhs);
  const double scale = std::max(std::abs(r.lhs), std::abs(r.rhs));
  r.rel_diff = scale > 0.0 ? std::abs(r.lhs - r.rhs) / scale : 0.0;
  return r;
}

std::vector<double> geometric_ladder(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0) || !(hi >= lo) || count == 0) {
    throw Error(ErrorKind::invalid_parameter, "ladder needs 0 < lo <= hi and count >= 1");
  }
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  const double step = std::log(hi / lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) out[i] = lo * std::exp(step * static_cast<double>(i));
  out.back() = hi;
  return out;
}

}  // namespace maxlab
