#include "maxlab/operators.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "maxlab/error.hpp"
#include "maxlab/parallel.hpp"

namespace maxlab {

void OperatorSpec::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw Error(ErrorKind::invalid_parameter, "operator lambda must lie in [0, 1]");
  }
  if (!(ladder.ratio > 1.0)) {
    throw Error(ErrorKind::invalid_parameter, "scale ladder ratio must exceed 1");
  }
  if (ladder.min_scale < 0.0 || ladder.max_scale < 0.0) {
    throw Error(ErrorKind::invalid_parameter, "scale bounds must be nonnegative");
  }
  if (subsample < 1) throw Error(ErrorKind::invalid_parameter, "subsample must be >= 1");
  if (mode == SearchMode::exact_small && family != BodyKind::box &&
      family != BodyKind::ball_inf) {
    throw Error(ErrorKind::configuration,
                "exact_small enumerates boxes; use the ladder mode for balls");
  }
}

std::string OperatorSpec::describe() const {
  std::ostringstream os;
  os << "lambda-maximal family=" << to_string(family) << " lambda=" << lambda
     << " mode=" << (mode == SearchMode::exact_small ? "exact_small" : "ladder");
  if (mode == SearchMode::ladder) {
    os << " ratio=" << ladder.ratio << " min_scale=" << ladder.min_scale
       << " max_scale=" << ladder.max_scale << " subsample=" << subsample;
  }
  return os.str();
}

double OneSidedLevelSet::total() const {
  long double s = left_extension;
  for (double m : cell_measure) s += m;
  return static_cast<double>(s);
}

namespace {

// Prefix masses S_b = integral of f over [x_0, x_b] at the cell faces of a 1D
// grid, optionally mirrored (x -> -x).
std::vector<double> prefix_masses(std::span<const double> v, double h) {
  std::vector<double> s(v.size() + 1, 0.0);
  long double acc = 0.0L;
  for (std::size_t i = 0; i < v.size(); ++i) {
    acc += static_cast<long double>(v[i]) * h;
    s[i + 1] = static_cast<double>(acc);
  }
  return s;
}

struct RightSup {
  std::vector<double> value;
  std::vector<std::size_t> face;  // maximizing right endpoint (face index)
};

// For every cell i: sup over faces b >= i+1 of the average over
// [center_i, x_b]. Upper hull of the face points swept right to left with a
// binary-searched tangent from the query point.
RightSup right_sup(std::span<const double> v, double h) {
  const std::size_t n = v.size();
  const std::vector<double> s = prefix_masses(v, h);
  RightSup out{std::vector<double>(n, 0.0), std::vector<std::size_t>(n, 0)};
  std::vector<std::size_t> hull;  // back() is the leftmost vertex
  hull.reserve(n + 1);
  const auto xs = [h](std::size_t b) { return static_cast<double>(b) * h; };
  const auto slope_faces = [&](std::size_t a, std::size_t b) {
    return (s[b] - s[a]) / (xs(b) - xs(a));
  };
  for (std::size_t ii = n; ii-- > 0;) {
    const std::size_t b = ii + 1;
    while (hull.size() >= 2 &&
           slope_faces(b, hull.back()) <= slope_faces(hull.back(), hull[hull.size() - 2])) {
      hull.pop_back();
    }
    hull.push_back(b);
    const double qx = (static_cast<double>(ii) + 0.5) * h;
    const double qy = s[ii] + 0.5 * h * v[ii];
    const auto slope_q = [&](std::size_t face) { return (s[face] - qy) / (xs(face) - qx); };
    // Vertex j counted from the left is hull[m - 1 - j].
    const std::size_t m = hull.size();
    std::size_t lo = 0, hi = m - 1;
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      const std::size_t a = hull[m - 1 - mid], c = hull[m - 2 - mid];
      if (slope_q(a) >= slope_faces(a, c)) {
        hi = mid;
      } else {
        lo = mid + 1;
      }
    }
    const std::size_t best = hull[m - 1 - lo];
    out.value[ii] = std::max(0.0, slope_q(best));
    out.face[ii] = best;
  }
  return out;
}

void require_1d(const GridFunction& g, const char* what) {
  if (g.dim() != 1) throw Error(ErrorKind::dimension, std::string(what) + " requires n = 1");
}

Body interval(double a, double b) {
  Body body;
  body.kind = BodyKind::box;
  body.dim = 1;
  body.center[0] = 0.5 * (a + b);
  body.half_widths[0] = 0.5 * (b - a);
  return body;
}

MaximalField uncentered_intervals(const GridFunction& g, const OperatorSpec& spec) {
  const std::size_t n = g.size();
  const double h = g.cell_size();
  const double x0 = g.origin()[0];
  const RightSup right = right_sup(g.values(), h);
  std::vector<double> mirrored(g.values().rbegin(), g.values().rend());
  const RightSup left = right_sup(mirrored, h);
  std::vector<double> out(n);
  MaximalField field{g, MaximalKind::lambda_body, spec, spec.describe(), {}};
  if (spec.record_argmax) field.argmax.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = right.value[i];
    const double l = left.value[n - 1 - i];
    const double center = x0 + (static_cast<double>(i) + 0.5) * h;
    if (r >= l) {
      out[i] = r;
      if (spec.record_argmax) {
        field.argmax[i] = interval(center, x0 + static_cast<double>(right.face[i]) * h);
      }
    } else {
      out[i] = l;
      if (spec.record_argmax) {
        const std::size_t face = n - left.face[n - 1 - i];
        field.argmax[i] = interval(x0 + static_cast<double>(face) * h, center);
      }
    }
    out[i] = std::max(out[i], g[i]);
  }
  field.values = g.with_values(std::move(out));
  return field;
}

// Half-open interval [k_lo, k_hi] on the half-cell lattice of one axis.
struct LatticeInterval {
  std::int64_t lo, hi;
};

MaximalField exact_small_boxes(const GridFunction& g, const OperatorSpec& spec) {
  const int dim = g.dim();
  const SummedTable table(g);
  const double h = g.cell_size();
  const double lambda = spec.lambda;
  std::array<std::vector<LatticeInterval>, kMaxDim> intervals;
  for (int a = 0; a < kMaxDim; ++a) {
    if (a >= dim) {
      intervals[a] = {{0, 2}};
      continue;
    }
    const auto n = static_cast<std::int64_t>(g.extent(a));
    // Shrinking a box to the grid never lowers its average, so lambda = 1
    // needs no margin; off-center bodies may need to reach past the edge.
    const std::int64_t margin = lambda < 1.0 ? 2 * n : 0;
    for (std::int64_t lo = -margin; lo <= 2 * n + margin; ++lo) {
      for (std::int64_t hi = lo + 1; hi <= 2 * n + margin; ++hi) intervals[a].push_back({lo, hi});
    }
  }
  const std::size_t cells = g.size();
  std::vector<double> best(g.values().begin(), g.values().end());
  std::vector<Body> argmax;
  if (spec.record_argmax) {
    argmax.resize(cells);
    for (std::size_t c = 0; c < cells; ++c) argmax[c] = Body::from_box(g.cell_box(c));
  }
  const auto member_range = [&](const LatticeInterval& iv, int axis, std::int64_t& first,
                                std::int64_t& last) {
    const auto n = static_cast<std::int64_t>(g.extent(axis));
    const double c = static_cast<double>(iv.lo + iv.hi);
    const double w = lambda * static_cast<double>(iv.hi - iv.lo);
    first = static_cast<std::int64_t>(std::ceil((c - w - 2.0) / 4.0 - 1e-9));
    last = static_cast<std::int64_t>(std::floor((c + w - 2.0) / 4.0 + 1e-9));
    first = std::max<std::int64_t>(first, 0);
    last = std::min<std::int64_t>(last, n - 1);
    return first <= last;
  };
  for (const auto& ix : intervals[0]) {
    std::int64_t f0, l0;
    if (!member_range(ix, 0, f0, l0)) continue;
    for (const auto& iy : intervals[1]) {
      std::int64_t f1 = 0, l1 = 0;
      if (dim > 1 && !member_range(iy, 1, f1, l1)) continue;
      for (const auto& iz : intervals[2]) {
        std::int64_t f2 = 0, l2 = 0;
        if (dim > 2 && !member_range(iz, 2, f2, l2)) continue;
        Box box;
        box.dim = dim;
        const LatticeInterval* ivs[3] = {&ix, &iy, &iz};
        for (int a = 0; a < dim; ++a) {
          box.lo[a] = g.origin()[a] + 0.5 * h * static_cast<double>(ivs[a]->lo);
          box.hi[a] = g.origin()[a] + 0.5 * h * static_cast<double>(ivs[a]->hi);
        }
        const double avg = table.box_average(box);
        for (std::int64_t i = f0; i <= l0; ++i) {
          for (std::int64_t j = f1; j <= l1; ++j) {
            for (std::int64_t k = f2; k <= l2; ++k) {
              const std::size_t c = g.flat({static_cast<std::size_t>(i), static_cast<std::size_t>(j),
                                            static_cast<std::size_t>(k)});
              if (avg > best[c]) {
                best[c] = avg;
                if (spec.record_argmax) argmax[c] = Body::from_box(box);
              }
            }
          }
        }
      }
    }
  }
  MaximalField field{g.with_values(std::move(best)), MaximalKind::lambda_body, spec,
                     spec.describe(), std::move(argmax)};
  return field;
}

std::vector<double> ladder_scales(const GridFunction& g, const ScaleLadder& ladder) {
  const double h = g.cell_size();
  double longest = 0.0;
  for (int a = 0; a < g.dim(); ++a) longest = std::max(longest, g.bounds().side(a));
  const double lo = ladder.min_scale > 0.0 ? ladder.min_scale : 0.5 * h;
  const double hi = ladder.max_scale > 0.0 ? ladder.max_scale : longest;
  if (lo < 0.5 * h * (1.0 - 1e-12)) {
    throw Error(ErrorKind::invalid_parameter, "ladder min scale must be at least one cell");
  }
  std::vector<double> scales;
  for (double s = lo; s <= hi * (1.0 + 1e-12); s *= ladder.ratio) scales.push_back(s);
  return scales;
}

MaximalField ladder_bodies(const GridFunction& g, const OperatorSpec& spec) {
  const SummedTable table(g);
  const std::vector<double> scales = ladder_scales(g, spec.ladder);
  const std::size_t cells = g.size();
  const std::size_t ns = scales.size();
  const int dim = g.dim();
  const double h = g.cell_size();
  const auto body_at = [&](std::size_t c, double s) {
    Body b;
    b.kind = spec.family;
    b.dim = dim;
    b.center = g.cell_center(c);
    for (int a = 0; a < dim; ++a) b.half_widths[a] = s;
    return b;
  };
  std::vector<double> avg(cells * ns);
  parallel_for(0, cells, [&](std::size_t c) {
    for (std::size_t k = 0; k < ns; ++k) {
      avg[c * ns + k] = table.body_average(body_at(c, scales[k]), spec.subsample);
    }
  });
  std::vector<double> best(g.values().begin(), g.values().end());
  std::vector<Body> argmax;
  if (spec.record_argmax) {
    argmax.resize(cells);
    for (std::size_t c = 0; c < cells; ++c) argmax[c] = Body::from_box(g.cell_box(c));
  }
  parallel_for(0, cells, [&](std::size_t x) {
    const Index xi = g.unflatten(x);
    for (std::size_t k = 0; k < ns; ++k) {
      if (spec.lambda == 0.0) {
        if (avg[x * ns + k] > best[x]) {
          best[x] = avg[x * ns + k];
          if (spec.record_argmax) argmax[x] = body_at(x, scales[k]);
        }
        continue;
      }
      // x lies in lambda*S(c) iff c lies in lambda*S(x): the bodies are
      // centrally symmetric and share their shape.
      const Body reach = body_at(x, spec.lambda * scales[k]);
      const auto span = static_cast<std::int64_t>(std::ceil(spec.lambda * scales[k] / h));
      std::array<std::int64_t, kMaxDim> lo{0, 0, 0}, hi{0, 0, 0};
      for (int a = 0; a < dim; ++a) {
        lo[a] = std::max<std::int64_t>(0, static_cast<std::int64_t>(xi[a]) - span);
        hi[a] = std::min<std::int64_t>(static_cast<std::int64_t>(g.extent(a)) - 1,
                                       static_cast<std::int64_t>(xi[a]) + span);
      }
      for (std::int64_t i = lo[0]; i <= hi[0]; ++i) {
        for (std::int64_t j = lo[1]; j <= hi[1]; ++j) {
          for (std::int64_t l = lo[2]; l <= hi[2]; ++l) {
            const std::size_t c = g.flat({static_cast<std::size_t>(i), static_cast<std::size_t>(j),
                                          static_cast<std::size_t>(l)});
            if (avg[c * ns + k] <= best[x]) continue;
            if (!reach.contains(g.cell_center(c))) continue;
            best[x] = avg[c * ns + k];
            if (spec.record_argmax) argmax[x] = body_at(c, scales[k]);
          }
        }
      }
    }
  });
  return MaximalField{g.with_values(std::move(best)), MaximalKind::lambda_body, spec,
                      spec.describe(), std::move(argmax)};
}

}  // namespace

MaximalField lambda_maximal(const GridFunction& g, const OperatorSpec& spec) {
  spec.validate();
  if (spec.mode == SearchMode::ladder) return ladder_bodies(g, spec);
  if (g.dim() == 1 && spec.lambda == 1.0) return uncentered_intervals(g, spec);
  return exact_small_boxes(g, spec);
}

MaximalField dyadic_maximal(const GridFunction& g, const Box& root, int levels) {
  const int dim = g.dim();
  if (root.dim != dim) throw Error(ErrorKind::dimension, "root and grid dimensions differ");
  if (levels < 0 || levels > 30) throw Error(ErrorKind::invalid_parameter, "levels must be in [0, 30]");
  const double h = g.cell_size();
  const double side = root.side(0);
  const double cells_per_side = std::ldexp(1.0, levels);
  std::array<std::size_t, kMaxDim> first{0, 0, 0};
  for (int a = 0; a < dim; ++a) {
    if (std::abs(root.side(a) - side) > 1e-12 * side) {
      throw Error(ErrorKind::alignment, "dyadic root must be a cube");
    }
    const double offset = (root.lo[a] - g.origin()[a]) / h;
    if (std::abs(offset - std::round(offset)) > 1e-9 || offset < -1e-9) {
      throw Error(ErrorKind::alignment, "dyadic root is not aligned with the grid cells");
    }
    first[a] = static_cast<std::size_t>(std::llround(offset));
    if (first[a] + static_cast<std::size_t>(cells_per_side) > g.extent(a)) {
      throw Error(ErrorKind::alignment, "dyadic root extends past the grid");
    }
  }
  if (std::abs(side / h - cells_per_side) > 1e-9 * cells_per_side) {
    throw Error(ErrorKind::alignment, "finest dyadic level does not match the cell size");
  }
  const SummedTable table(g);
  const auto side_cells = static_cast<std::size_t>(cells_per_side);
  std::vector<double> best(g.values().begin(), g.values().end());
  for (int level = 0; level <= levels; ++level) {
    const std::size_t cube = side_cells >> level;
    parallel_for(0, g.size(), [&](std::size_t c) {
      const Index idx = g.unflatten(c);
      Index lo{0, 0, 0}, hi{1, 1, 1};
      for (int a = 0; a < dim; ++a) {
        if (idx[a] < first[a] || idx[a] >= first[a] + side_cells) return;
        lo[a] = first[a] + (idx[a] - first[a]) / cube * cube;
        hi[a] = lo[a] + cube;
      }
      const double avg = static_cast<double>(table.cell_sum(lo, hi)) /
                         std::pow(static_cast<double>(cube), dim);
      best[c] = std::max(best[c], avg);
    });
  }
  std::ostringstream os;
  os << "dyadic levels=" << levels;
  return MaximalField{g.with_values(std::move(best)), MaximalKind::dyadic, std::nullopt,
                      os.str(), {}};
}

MaximalField one_sided_maximal(const GridFunction& g) {
  require_1d(g, "one-sided maximal function");
  const RightSup right = right_sup(g.values(), g.cell_size());
  std::vector<double> out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = std::max(right.value[i], g[i]);
  return MaximalField{g.with_values(std::move(out)), MaximalKind::one_sided, std::nullopt,
                      "one-sided right maximal", {}};
}

OneSidedLevelSet one_sided_superlevel(const GridFunction& g, double t) {
  require_1d(g, "one-sided level set");
  if (!(t > 0.0)) throw Error(ErrorKind::invalid_level, "level t must be positive");
  const std::size_t n = g.size();
  const double h = g.cell_size();
  const std::vector<double> s = prefix_masses(g.values(), h);
  // G_b = S_b - t x_b (x measured from the grid origin); x is in the set iff
  // some face b right of x has S_b - S(x) > t (x_b - x).
  std::vector<double> suffix_max(n + 1);
  double run = -INFINITY;
  for (std::size_t b = n + 1; b-- > 0;) {
    run = std::max(run, s[b] - t * static_cast<double>(b) * h);
    suffix_max[b] = run;
  }
  OneSidedLevelSet out;
  out.cell_measure.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = g[i];
    if (v > t) {
      out.cell_measure[i] = h;
      continue;
    }
    const double gain = suffix_max[i + 1] - (s[i + 1] - t * static_cast<double>(i + 1) * h);
    if (gain <= 0.0 || v == t) {
      out.cell_measure[i] = gain > 0.0 ? h : 0.0;
      continue;
    }
    out.cell_measure[i] = std::min(h, gain / (t - v));
  }
  // Left of the grid f = 0: x < 0 is in the set iff x > x_b - S_b / t for some b.
  double reach = 0.0;
  for (std::size_t b = 0; b <= n; ++b) {
    reach = std::min(reach, static_cast<double>(b) * h - s[b] / t);
  }
  out.left_extension = -reach;
  return out;
}

nlohmann::json CounterexampleReport::to_json() const {
  return nlohmann::json{
      {"cells_per_axis", options.cells_per_axis},
      {"half_width", options.half_width},
      {"max_radius", options.max_radius},
      {"ladder_ratio", options.ladder_ratio},
      {"subsample", options.subsample},
      {"cell_size", cell_size},
      {"interior_cells", interior_cells},
      {"max_rel_deviation", max_rel_deviation},
      {"worst_center", {worst_center[0], worst_center[1], worst_center[2]}},
      {"probe", {{"point", {2.0, 0.0, 0.0}}, {"f", probe_f}, {"M0f", probe_m}}},
      {"origin", {{"f", origin_f}, {"M0f", origin_m}}},
  };
}

CounterexampleReport centered_counterexample_report(const CounterexampleOptions& options) {
  const std::size_t n = options.cells_per_axis;
  const double L = options.half_width;
  if (n < 2) throw Error(ErrorKind::invalid_parameter, "need at least two cells per axis");
  if (!(L > 0.0)) throw Error(ErrorKind::invalid_parameter, "half width must be positive");
  if (!(options.ladder_ratio > 1.0)) {
    throw Error(ErrorKind::invalid_parameter, "ladder ratio must exceed 1");
  }
  if (options.subsample < 1) throw Error(ErrorKind::invalid_parameter, "subsample must be >= 1");
  const double h = 2.0 * L / static_cast<double>(n);
  const auto profile = [](const Point& x) {
    const double r = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
    return r <= 1.0 ? 1.0 : 1.0 / r;
  };
  const GridFunction g = GridFunction::sample({n, n, n}, Point{-L, -L, -L}, h, profile);
  const SummedTable table(g);

  // Supremum of centered ball averages at x, starting from the value at x.
  const auto centered_max = [&](const Point& x, double value) {
    const double reach =
        L - std::max({std::abs(x[0]), std::abs(x[1]), std::abs(x[2])});
    const double top = std::min(options.max_radius, reach);
    double best = value;
    Body ball;
    ball.kind = BodyKind::ball2;
    ball.dim = 3;
    ball.center = x;
    for (double r = 0.5 * h; r <= top * (1.0 + 1e-12); r *= options.ladder_ratio) {
      ball.half_widths = {r, r, r};
      best = std::max(best, table.body_average(ball, options.subsample));
    }
    return best;
  };

  // f and the ball family are invariant under the 48 signed permutations of
  // the axes, so cells with i >= j >= k in the upper half cover every orbit.
  const std::size_t half = n / 2;
  std::vector<std::size_t> fundamental;
  std::size_t interior = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t c = g.flat({i, j, k});
        const Point x = g.cell_center(c);
        if (std::max({std::abs(x[0]), std::abs(x[1]), std::abs(x[2])}) > 0.5 * L) continue;
        ++interior;
        if (i >= j && j >= k && k >= half) fundamental.push_back(c);
      }
    }
  }
  std::vector<double> deviation(fundamental.size());
  parallel_for(0, fundamental.size(), [&](std::size_t t) {
    const std::size_t c = fundamental[t];
    deviation[t] = (centered_max(g.cell_center(c), g[c]) - g[c]) / g[c];
  });

  CounterexampleReport report;
  report.options = options;
  report.cell_size = h;
  report.interior_cells = interior;
  report.max_rel_deviation = -INFINITY;
  for (std::size_t t = 0; t < fundamental.size(); ++t) {
    if (deviation[t] > report.max_rel_deviation) {
      report.max_rel_deviation = deviation[t];
      report.worst_center = g.cell_center(fundamental[t]);
    }
  }
  if (fundamental.empty()) report.max_rel_deviation = 0.0;
  // The probe sits on a cell corner, so it is compared with the profile value
  // there rather than with a cell value.
  const Point probe{2.0, 0.0, 0.0};
  if (2.0 + 0.5 * h <= L) {
    report.probe_f = profile(probe);
    report.probe_m = centered_max(probe, report.probe_f);
  }
  const std::size_t origin = g.locate(Point{0.25 * h, 0.25 * h, 0.25 * h});
  report.origin_f = g[origin];
  report.origin_m = centered_max(g.cell_center(origin), g[origin]);
  return report;
}

std::string argmax_json_lines(const MaximalField& field) {
  std::ostringstream os;
  for (std::size_t c = 0; c < field.argmax.size(); ++c) {
    nlohmann::json line = to_json(field.argmax[c]);
    line["cell"] = c;
    os << line.dump() << '\n';
  }
  return os.str();
}

}  // namespace maxlab
