#include <doctest.h>

#include <cmath>
#include <limits>

#include "maxlab/error.hpp"
#include "maxlab/operators.hpp"
#include "oracles.hpp"

using namespace maxlab;
using namespace maxlab::testing;

namespace {

// Brute force over boxes with corners on the half-cell lattice, averages from
// per-cell overlaps, membership tested on real coordinates.
std::vector<double> brute_lattice_max(const GridFunction& g, double lambda, int margin_cells) {
  const int dim = g.dim();
  const double h = g.cell_size();
  std::array<std::vector<double>, 3> coords;
  for (int a = 0; a < dim; ++a) {
    const auto n = static_cast<int>(g.extent(a));
    for (int k = -2 * margin_cells; k <= 2 * (n + margin_cells); ++k) {
      coords[a].push_back(g.origin()[a] + 0.5 * h * k);
    }
  }
  std::vector<double> out(g.values().begin(), g.values().end());
  std::vector<Box> boxes;
  const auto push_axis = [&](auto&& self, int axis, Box box) -> void {
    if (axis == dim) {
      boxes.push_back(box);
      return;
    }
    for (std::size_t i = 0; i < coords[axis].size(); ++i) {
      for (std::size_t j = i + 1; j < coords[axis].size(); ++j) {
        box.lo[axis] = coords[axis][i];
        box.hi[axis] = coords[axis][j];
        self(self, axis + 1, box);
      }
    }
  };
  Box start;
  start.dim = dim;
  push_axis(push_axis, 0, start);
  for (const Box& box : boxes) {
    const double avg = direct_box_average(g, box);
    const Point center = box.center();
    for (std::size_t c = 0; c < g.size(); ++c) {
      const Point x = g.cell_center(c);
      bool inside = true;
      for (int a = 0; a < dim; ++a) {
        const double reach = lambda * 0.5 * box.side(a);
        if (std::abs(x[a] - center[a]) > reach + 1e-9 * h) inside = false;
      }
      if (inside) out[c] = std::max(out[c], avg);
    }
  }
  return out;
}

// Right-sided sup by direct enumeration of faces.
std::vector<double> brute_one_sided(const GridFunction& g) {
  const double h = g.cell_size();
  std::vector<double> out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.cell_center(i)[0];
    double best = g[i];
    for (std::size_t b = i + 1; b <= g.size(); ++b) {
      const double xb = g.origin()[0] + static_cast<double>(b) * h;
      best = std::max(best, direct_box_average(g, make_box(x, xb)));
    }
    out[i] = best;
  }
  return out;
}

OperatorSpec box_spec(double lambda) {
  OperatorSpec s;
  s.lambda = lambda;
  return s;
}

}  // namespace

TEST_CASE("operator spec validation") {
  OperatorSpec s;
  s.lambda = 1.5;
  CHECK_THROWS_AS(s.validate(), Error);
  s = OperatorSpec{};
  s.ladder.ratio = 1.0;
  CHECK_THROWS_AS(s.validate(), Error);
  s = OperatorSpec{};
  s.family = BodyKind::ball2;
  CHECK_THROWS_AS(s.validate(), Error);
  s.mode = SearchMode::ladder;
  CHECK_NOTHROW(s.validate());
}

TEST_CASE("constant density is reproduced") {
  const GridFunction g = GridFunction::zeros({6, 5}, {}, 0.5).with_values(std::vector<double>(30, 0.7));
  for (double lambda : {0.0, 0.5, 1.0}) {
    const MaximalField m = lambda_maximal(g, box_spec(lambda));
    for (double v : m.values.values()) CHECK(v == doctest::Approx(0.7).epsilon(1e-12));
  }
  OperatorSpec ladder;
  ladder.family = BodyKind::ball2;
  ladder.mode = SearchMode::ladder;
  ladder.lambda = 0.5;
  const MaximalField mb = lambda_maximal(g, ladder);
  for (double v : mb.values.values()) CHECK(v == doctest::Approx(0.7).epsilon(1e-12));
  const Box root = g.cell_box(0);
  const GridFunction g1 = GridFunction::zeros({8}, {}, 1.0).with_values(std::vector<double>(8, 2.0));
  const MaximalField d = dyadic_maximal(g1, make_box(0, 8), 3);
  for (double v : d.values.values()) CHECK(v == doctest::Approx(2.0));
  const MaximalField r = one_sided_maximal(g1);
  for (double v : r.values.values()) CHECK(v == doctest::Approx(2.0));
  (void)root;
}

TEST_CASE("uncentered interval maximal function of an indicator") {
  const GridFunction g = chi01(4, -1.0, 3.0);
  OperatorSpec rec = box_spec(1.0);
  rec.record_argmax = true;
  const MaximalField m = lambda_maximal(g, rec);
  // Sup over intervals containing x: 1 inside, 1/(1-x) left, 1/x right.
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.cell_center(i)[0];
    double expect = 1.0;
    if (x < 0.0) expect = 1.0 / (1.0 - x);
    if (x > 1.0) expect = 1.0 / x;
    CHECK(m.values[i] == doctest::Approx(expect).epsilon(1e-12));
    const Body& b = m.argmax[i];
    const Box box = b.bounding_box();
    CHECK(box.lo[0] <= x + 1e-12);
    CHECK(box.hi[0] >= x - 1e-12);
    CHECK(direct_box_average(g, box) == doctest::Approx(m.values[i]).epsilon(1e-12));
  }
}

TEST_CASE("uncentered value at 2 for the unit indicator is one half") {
  // Cells of width 0.8 put a center at 2.0; the cell averages of chi_[0,1] are
  // 1 and 0.25, and the supremum is attained by [0, 2].
  const GridFunction w = GridFunction::zeros({5}, {0.0, 0, 0}, 0.8).with_values({1, 0.25, 0, 0, 0});
  REQUIRE(w.cell_center(2)[0] == doctest::Approx(2.0));
  OperatorSpec rec = box_spec(1.0);
  rec.record_argmax = true;
  const MaximalField m = lambda_maximal(w, rec);
  CHECK(m.values[2] == doctest::Approx(0.5).epsilon(1e-12));
  const Box box = m.argmax[2].bounding_box();
  CHECK(box.lo[0] == doctest::Approx(0.0));
  CHECK(box.hi[0] == doctest::Approx(2.0));
}

TEST_CASE("1D fast path matches half-lattice enumeration") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const GridFunction g = random_grid({9}, seed, 0.3, {-1.0, 0, 0});
    const MaximalField m = lambda_maximal(g, box_spec(1.0));
    const std::vector<double> brute = brute_lattice_max(g, 1.0, 0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      CHECK(m.values[i] == doctest::Approx(brute[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("lattice enumeration matches brute force for every lambda") {
  for (double lambda : {0.0, 0.3, 0.5, 1.0}) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const GridFunction g1 = random_grid({6}, seed, 1.0);
      const MaximalField m1 = lambda_maximal(g1, box_spec(lambda));
      // lambda = 1 in 1D takes the hull path; the others enumerate.
      const std::vector<double> b1 = brute_lattice_max(g1, lambda, lambda < 1.0 ? 6 : 0);
      for (std::size_t i = 0; i < g1.size(); ++i) {
        CHECK(m1.values[i] == doctest::Approx(b1[i]).epsilon(1e-12));
      }
      const GridFunction g2 = random_grid({3, 4}, seed + 10, 0.5, {0.25, -1.0, 0});
      const MaximalField m2 = lambda_maximal(g2, box_spec(lambda));
      const std::vector<double> b2 = brute_lattice_max(g2, lambda, lambda < 1.0 ? 4 : 0);
      for (std::size_t i = 0; i < g2.size(); ++i) {
        CHECK(m2.values[i] == doctest::Approx(b2[i]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("monotone in lambda and dominates f") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const GridFunction g = random_grid({5, 5}, seed);
    std::vector<double> prev(g.values().begin(), g.values().end());
    for (double lambda : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      const MaximalField m = lambda_maximal(g, box_spec(lambda));
      for (std::size_t c = 0; c < g.size(); ++c) {
        CHECK(m.values[c] >= prev[c] - 1e-12);
        CHECK(std::isfinite(m.values[c]));
        prev[c] = m.values[c];
      }
    }
  }
}

TEST_CASE("sublinearity, homogeneity and shift covariance") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const GridFunction f = random_grid({12}, seed, 0.5);
    const GridFunction g = random_grid({12}, seed + 100, 0.5);
    std::vector<double> sum(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) sum[i] = f[i] + g[i];
    for (double lambda : {0.0, 0.5, 1.0}) {
      const OperatorSpec spec = box_spec(lambda);
      const MaximalField mf = lambda_maximal(f, spec);
      const MaximalField mg = lambda_maximal(g, spec);
      const MaximalField ms = lambda_maximal(f.with_values(sum), spec);
      const MaximalField m3 = lambda_maximal(f.scaled(3.0), spec);
      for (std::size_t i = 0; i < f.size(); ++i) {
        CHECK(ms.values[i] <= mf.values[i] + mg.values[i] + 1e-12);
        CHECK(m3.values[i] == doctest::Approx(3.0 * mf.values[i]).epsilon(1e-12));
      }
    }
    // Translating the grid origin by whole cells translates Mf.
    std::vector<double> padded(20, 0.0);
    for (std::size_t i = 0; i < 12; ++i) padded[i + 3] = f[i];
    const GridFunction a = GridFunction::zeros({20}, {0, 0, 0}, 0.5).with_values(padded);
    std::vector<double> shifted(20, 0.0);
    for (std::size_t i = 0; i < 12; ++i) shifted[i + 7] = f[i];
    const GridFunction b = a.with_values(shifted);
    for (double lambda : {0.0, 1.0}) {
      const MaximalField ma = lambda_maximal(a, box_spec(lambda));
      const MaximalField mb = lambda_maximal(b, box_spec(lambda));
      for (std::size_t i = 0; i + 4 < 20; ++i) {
        CHECK(mb.values[i + 4] == doctest::Approx(ma.values[i]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("ladder mode under-approximates and respects the ordering") {
  const GridFunction g = random_grid({10, 10}, 7, 0.1);
  OperatorSpec spec;
  spec.mode = SearchMode::ladder;
  spec.lambda = 1.0;
  const MaximalField ladder = lambda_maximal(g, spec);
  const MaximalField exact = lambda_maximal(g, box_spec(1.0));
  for (std::size_t c = 0; c < g.size(); ++c) {
    CHECK(ladder.values[c] <= exact.values[c] + 1e-12);
    CHECK(ladder.values[c] >= g[c]);
  }
  spec.family = BodyKind::ball2;
  std::vector<double> prev(g.values().begin(), g.values().end());
  for (double lambda : {0.0, 0.5, 1.0}) {
    spec.lambda = lambda;
    const MaximalField m = lambda_maximal(g, spec);
    for (std::size_t c = 0; c < g.size(); ++c) {
      CHECK(m.values[c] >= prev[c] - 1e-12);
      prev[c] = m.values[c];
    }
  }
  spec.record_argmax = true;
  spec.lambda = 0.0;
  const MaximalField rec = lambda_maximal(g, spec);
  for (std::size_t c = 0; c < g.size(); ++c) {
    const Point x = g.cell_center(c);
    CHECK(rec.argmax[c].center[0] == doctest::Approx(x[0]));
    CHECK(rec.argmax[c].center[1] == doctest::Approx(x[1]));
  }
}

TEST_CASE("dyadic maximal function") {
  // 1D root [0, 64), f = chi_[0,1): at 1.5 the best ancestor is [0, 2).
  std::vector<double> v(64, 0.0);
  v[0] = 1.0;
  const GridFunction g = GridFunction::zeros({64}, {}, 1.0).with_values(v);
  const MaximalField d = dyadic_maximal(g, make_box(0, 64), 6);
  CHECK(d.values[g.locate({1.5, 0, 0})] == doctest::Approx(0.5));
  CHECK(d.values[0] == doctest::Approx(1.0));
  CHECK(d.values[3] == doctest::Approx(0.25));

  // Ancestor enumeration oracle in 2D, and domination by the uncentered box
  // operator.
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const GridFunction f = random_grid({8, 8}, seed, 0.25, {-1.0, 0.0, 0});
    const Box root = f.bounds();
    const MaximalField md = dyadic_maximal(f, root, 3);
    const MaximalField mu = lambda_maximal(f, box_spec(1.0));
    for (std::size_t c = 0; c < f.size(); ++c) {
      const Index idx = f.unflatten(c);
      double best = 0.0;
      for (int level = 0; level <= 3; ++level) {
        const std::size_t side = std::size_t{8} >> level;
        const std::size_t i0 = idx[0] / side * side, j0 = idx[1] / side * side;
        const double avg = direct_box_average(
            f, make_box(-1.0 + 0.25 * i0, -1.0 + 0.25 * (i0 + side), 0.25 * j0, 0.25 * (j0 + side)));
        best = std::max(best, avg);
      }
      CHECK(md.values[c] == doctest::Approx(best).epsilon(1e-12));
      CHECK(md.values[c] <= mu.values[c] + 1e-12);
    }
  }

  // Sub-root: cells outside keep f.
  const GridFunction f = random_grid({6}, 3);
  const MaximalField sub = dyadic_maximal(f, make_box(2, 6), 2);
  CHECK(sub.values[0] == f[0]);
  CHECK(sub.values[1] == f[1]);

  CHECK_THROWS_AS(dyadic_maximal(f, make_box(0.5, 4.5), 2), Error);
  CHECK_THROWS_AS(dyadic_maximal(f, make_box(0, 8), 3), Error);
  CHECK_THROWS_AS(dyadic_maximal(f, make_box(0, 4), 3), Error);
  try {
    dyadic_maximal(f, make_box(0.5, 4.5), 2);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::alignment);
  }
}

TEST_CASE("one-sided maximal function") {
  const GridFunction g = chi01(8, -2.0, 2.0);
  const MaximalField r = one_sided_maximal(g);
  const MaximalField u = lambda_maximal(g, box_spec(1.0));
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.cell_center(i)[0];
    double expect = 0.0;
    if (x < 0.0) expect = 1.0 / (1.0 - x);
    if (x >= 0.0 && x < 1.0) expect = 1.0;
    CHECK(r.values[i] == doctest::Approx(expect).epsilon(1e-12));
    CHECK(r.values[i] <= u.values[i] + 1e-12);
  }
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const GridFunction f = random_grid({17}, seed, 0.2, {-1.0, 0, 0});
    const MaximalField m = one_sided_maximal(f);
    const std::vector<double> brute = brute_one_sided(f);
    const MaximalField mu = lambda_maximal(f, box_spec(1.0));
    for (std::size_t i = 0; i < f.size(); ++i) {
      CHECK(m.values[i] == doctest::Approx(brute[i]).epsilon(1e-12));
      CHECK(m.values[i] <= mu.values[i] + 1e-12);
    }
  }
  CHECK_THROWS_AS(one_sided_maximal(random_grid({3, 3}, 1)), Error);
}

TEST_CASE("one-sided level set is exact") {
  // Fine sampling oracle: classify dense points by direct face enumeration.
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const GridFunction f = random_grid({7}, seed, 0.5);
    const double h = f.cell_size();
    for (double t : {0.2, 0.45, 0.7}) {
      const OneSidedLevelSet set = one_sided_superlevel(f, t);
      const int samples = 4000;
      for (std::size_t i = 0; i < f.size(); ++i) {
        int hits = 0;
        for (int s = 0; s < samples; ++s) {
          const double x = (static_cast<double>(i) + (s + 0.5) / samples) * h;
          double best = 0.0;
          for (std::size_t b = i + 1; b <= f.size(); ++b) {
            const double xb = static_cast<double>(b) * h;
            best = std::max(best, direct_box_average(f, make_box(x, xb)));
          }
          if (best > t || f[i] > t) ++hits;
        }
        CHECK(std::abs(set.cell_measure[i] - hits * h / samples) <= 2.0 * h / samples);
      }
      // Left of the grid: x < 0 is in the set iff some face average beats t.
      double reach = 0.0;
      for (std::size_t b = 1; b <= f.size(); ++b) {
        const double mass = direct_box_mass(f, make_box(0, static_cast<double>(b) * h));
        reach = std::max(reach, mass / t - static_cast<double>(b) * h);
      }
      CHECK(set.left_extension == doctest::Approx(reach).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(one_sided_superlevel(random_grid({3}, 1), 0.0), Error);
}

TEST_CASE("argmax json lines") {
  const GridFunction g = GridFunction::zeros({3}, {}, 1.0).with_values({0, 1, 0});
  OperatorSpec spec = box_spec(1.0);
  spec.record_argmax = true;
  const MaximalField m = lambda_maximal(g, spec);
  const std::string lines = argmax_json_lines(m);
  std::size_t count = 0;
  std::size_t pos = 0;
  while ((pos = lines.find('\n', pos)) != std::string::npos) {
    ++count;
    ++pos;
  }
  CHECK(count == 3);
  const auto first = nlohmann::json::parse(lines.substr(0, lines.find('\n')));
  CHECK(first["cell"] == 0);
  CHECK(first["kind"] == "box");
  CHECK(first.contains("center"));
  CHECK(first.contains("half_widths"));
}

TEST_CASE("superharmonic profile: centered averages stay at f") {
  CounterexampleOptions opt;
  opt.cells_per_axis = 16;
  const CounterexampleReport r16 = centered_counterexample_report(opt);
  CHECK(r16.origin_f == doctest::Approx(1.0));
  CHECK(r16.origin_m == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r16.probe_f == doctest::Approx(0.5));
  CHECK(r16.interior_cells == 8 * 8 * 8);
  CHECK(r16.to_json().contains("max_rel_deviation"));

  // Every interior cell, without the symmetry reduction.
  const double h = r16.cell_size;
  const GridFunction g = GridFunction::sample({16, 16, 16}, {-8, -8, -8}, h, [](const Point& x) {
    const double r = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
    return std::min(1.0, 1.0 / r);
  });
  const SummedTable table(g);
  double worst = 0.0;
  for (std::size_t c = 0; c < g.size(); ++c) {
    const Point x = g.cell_center(c);
    if (std::max({std::abs(x[0]), std::abs(x[1]), std::abs(x[2])}) > 4.0) continue;
    double best = g[c];
    Body ball{BodyKind::ball2, 3, x, {}};
    for (double r = 0.5 * h; r <= 1.0 + 1e-12; r *= opt.ladder_ratio) {
      ball.half_widths = {r, r, r};
      best = std::max(best, table.body_average(ball, opt.subsample));
    }
    worst = std::max(worst, (best - g[c]) / g[c]);
  }
  CHECK(r16.max_rel_deviation == doctest::Approx(worst).epsilon(1e-12));

  // Refinement: the deviation shrinks at least like h.
  double prev = r16.max_rel_deviation;
  for (std::size_t n : {32, 64}) {
    opt.cells_per_axis = n;
    const CounterexampleReport r = centered_counterexample_report(opt);
    CHECK(r.max_rel_deviation >= 0.0);
    CHECK(r.max_rel_deviation <= 0.625 * prev);
    CHECK(r.probe_m >= r.probe_f);
    CHECK(r.probe_m <= 0.5 * (1.0 + 4.0 * r.max_rel_deviation));
    prev = r.max_rel_deviation;
  }
  CHECK(prev <= 0.05);
}
