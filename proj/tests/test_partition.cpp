#include <doctest.h>

#include <cmath>

#include "maxlab/error.hpp"
#include "maxlab/partition.hpp"
#include "oracles.hpp"

using namespace maxlab;
using namespace maxlab::testing;

namespace {

GridFunction ramp(std::size_t n) {
  return GridFunction::sample({n}, {}, 1.0 / static_cast<double>(n),
                              [](const Point& x) { return x[0]; });
}

Box unit_square() { return make_box(0, 1, 0, 1); }

}  // namespace

TEST_CASE("split of a constant density cuts at the midpoint") {
  const GridFunction g =
      GridFunction::zeros({8, 8}, {}, 0.125).with_values(std::vector<double>(64, 2.0));
  for (double lam : {1.1, 1.5, 2.0}) {
    const SplitResult s = split_box(g, unit_square(), lam);
    CHECK(s.cut.axis == 0);
    CHECK(s.cut.coord == doctest::Approx(0.5));
    CHECK(s.cut.minus_average == doctest::Approx(2.0));
    CHECK(s.cut.plus_average == doctest::Approx(2.0));
  }
  // Ties go to the lowest axis; a taller box is cut across axis 1.
  const SplitResult tall = split_box(g, make_box(0, 0.5, 0, 1), 1.5);
  CHECK(tall.cut.axis == 1);
}

TEST_CASE("split of a ramp stops at the extreme position") {
  // f(x) = x: the left part always has the smaller average, so the cut runs to
  // 1 - c = 1 / lambda.
  const GridFunction g = ramp(1024);
  const SplitResult s = split_box(g, make_box(0, 1), 1.5);
  CHECK_FALSE(s.cut.equalized);
  CHECK(s.cut.coord == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  // Cell values are cell-center samples, so the averages are the exact means of
  // x over each part.
  CHECK(s.cut.minus_average == doctest::Approx(1.0 / 6.0).epsilon(1e-6));
  CHECK(s.cut.plus_average == doctest::Approx(2.0 / 3.0).epsilon(1e-6));
  CHECK(s.cut.plus_average <= 1.5 * 0.5);

  const SplitResult s2 = split_box(g, make_box(0, 1), 2.0);
  CHECK(s2.cut.coord == doctest::Approx(0.5));
  CHECK(s2.cut.minus_average == doctest::Approx(0.25).epsilon(1e-6));
  CHECK(s2.cut.plus_average == doctest::Approx(0.75).epsilon(1e-6));

  // Mirrored: a decreasing ramp moves the cut upward.
  const GridFunction d = GridFunction::sample({1024}, {}, 1.0 / 1024,
                                              [](const Point& x) { return 1.0 - x[0]; });
  const SplitResult s3 = split_box(d, make_box(0, 1), 1.5);
  CHECK(s3.cut.coord == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("split finds the equalizing position") {
  // Mass at both ends: averages equalize before the extreme position.
  const GridFunction g = GridFunction::zeros({8}, {}, 0.125).with_values({1, 0, 0, 0, 0, 0, 0, 1.5});
  const SplitResult s = split_box(g, make_box(0, 1), 1.5);
  CHECK(s.cut.equalized);
  CHECK(s.cut.minus_average == doctest::Approx(s.cut.plus_average).epsilon(1e-9));
  // Oracle: for c in [1/3, 1/2] the left mass 0.125 over c equals the right
  // mass 0.1875 over 1 - c at c = 0.4.
  CHECK(s.cut.coord == doctest::Approx(0.4).epsilon(1e-10));
}

TEST_CASE("split properties on random densities") {
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    const GridFunction g = random_grid({13, 9}, seed, 0.1);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double x0 = u(rng) * 0.6, y0 = u(rng) * 0.4;
    const Box P = make_box(x0, x0 + 0.1 + u(rng) * 0.6, y0, y0 + 0.1 + u(rng) * 0.4);
    const double lam = 1.0 + u(rng);
    const SplitResult s = split_box(g, P, lam);
    const double avg = direct_box_average(g, P);
    CHECK(direct_box_average(g, s.minus) <= lam * avg * (1 + 1e-9));
    CHECK(direct_box_average(g, s.plus) <= lam * avg * (1 + 1e-9));
    CHECK(s.cut.fraction >= 1.0 - 1.0 / lam - 1e-12);
    CHECK(s.cut.fraction <= 1.0 / lam + 1e-12);
    CHECK(s.minus.volume() + s.plus.volume() == doctest::Approx(P.volume()).epsilon(1e-12));
    const int longest = P.side(1) > P.side(0) ? 1 : 0;
    CHECK(s.cut.axis == longest);
  }
}

TEST_CASE("split errors") {
  const GridFunction g = random_grid({4}, 1);
  CHECK_THROWS_AS(split_box(g, make_box(1, 1), 1.5), Error);
  try {
    split_box(g, make_box(1, 1), 1.5);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::degenerate_box);
  }
  CHECK_THROWS_AS(split_box(g, make_box(0, 2), 2.5), Error);
  CHECK_THROWS_AS(split_box(g, make_box(0, 2), 1.0), Error);
}

TEST_CASE("constant density gives the dyadic subsquares") {
  const GridFunction g =
      GridFunction::zeros({4, 4}, {}, 0.25).with_values(std::vector<double>(16, 1.0));
  FiltrationOptions opt;
  opt.lambda = 1.5;
  opt.stop.max_depth = 4;
  const FiltrationTree t = build_filtration(g, unit_square(), opt);
  const auto level = t.level(4);
  REQUIRE(level.size() == 16);
  for (std::size_t i : level) {
    const Box& b = t.nodes[i].box;
    CHECK(b.side(0) == doctest::Approx(0.25));
    CHECK(b.side(1) == doctest::Approx(0.25));
    CHECK(std::fmod(b.lo[0] * 4.0, 1.0) == doctest::Approx(0.0));
  }
  CHECK(verify_density(t, g, 1.5).passed());
}

TEST_CASE("random filtrations pass every density item") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const GridFunction g = random_grid({16, 16}, seed, 1.0 / 16);
    FiltrationOptions opt;
    opt.lambda = 1.5;
    opt.stop.min_diam = 1.0 / 32;
    const FiltrationTree t = build_filtration(g, unit_square(), opt);
    const DensityReport r = verify_density(t, g, 1.5);
    CHECK(r.passed());
    CHECK(r.items.size() == 8);
    CHECK(r.max_volume_fraction <= 1.0 / 1.5 + 1e-12);
    for (std::size_t i : t.leaves()) CHECK(t.nodes[i].box.diameter() < 1.0 / 32);
    // Statistics agree with direct overlap sums.
    for (std::size_t i = 0; i < t.nodes.size(); i += 37) {
      const auto& n = t.nodes[i];
      CHECK(n.x == doctest::Approx(direct_box_average(g, n.box)).epsilon(1e-10));
      CHECK(n.y == doctest::Approx(direct_box_average(g.pow(2.0), n.box)).epsilon(1e-10));
      if (n.parent >= 0) {
        CHECK(n.z == std::max(n.x, t.nodes[static_cast<std::size_t>(n.parent)].z));
      }
    }
  }
  // lambda above 2 is handled with lambda_eff = 2.
  const GridFunction g = random_grid({8, 8}, 99, 1.0 / 8);
  FiltrationOptions opt;
  opt.lambda = 3.0;
  opt.stop.max_depth = 6;
  const FiltrationTree t = build_filtration(g, unit_square(), opt);
  CHECK(verify_density(t, g, 3.0).passed());
}

TEST_CASE("filtration configuration errors") {
  const GridFunction g = random_grid({4, 4}, 1, 0.25);
  FiltrationOptions opt;
  CHECK_THROWS_AS(build_filtration(g, unit_square(), opt), Error);
  try {
    build_filtration(g, unit_square(), opt);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::configuration);
  }
  opt.stop.max_depth = 2;
  opt.lambda = 1.0;
  CHECK_THROWS_AS(build_filtration(g, unit_square(), opt), Error);
}

TEST_CASE("verify_density reports planted violations") {
  const GridFunction g = GridFunction::zeros({4}, {}, 0.25).with_values({1, 1, 1, 1});
  FiltrationTree t;
  FiltrationNode root;
  root.box = make_box(0, 1);
  t.nodes.push_back(root);
  CHECK(verify_density(t, g, 1.5).passed());  // single node: vacuous

  // Child [0, 0.25] of a parent whose average is 1 / (1.01 * 1.5) of the
  // child's average.
  const double lam = 1.5;
  const double c = 1.01 * lam;
  // Parent [0, 1]: cells (c, a, a, a) with mean 1.
  const double a = (4.0 - c) / 3.0;
  const GridFunction h = g.with_values({c, a, a, a});
  t.nodes[0].children = {1, 2};
  FiltrationNode l, r;
  l.box = make_box(0, 0.25);
  l.parent = 0;
  l.depth = 1;
  r.box = make_box(0.25, 1);
  r.parent = 0;
  r.depth = 1;
  t.nodes.push_back(l);
  t.nodes.push_back(r);
  const DensityReport rep = verify_density(t, h, lam);
  CHECK_FALSE(rep.passed());
  const DensityItem& item7 = rep.items[6];
  CHECK(item7.item == 7);
  CHECK_FALSE(item7.passed);
  CHECK(item7.worst == doctest::Approx(0.01 * lam).epsilon(1e-9));
  // Overlapping children fail tiling and disjointness.
  t.nodes[2].box = make_box(0.2, 1);
  const DensityReport bad = verify_density(t, g, lam);
  CHECK_FALSE(bad.items[3].passed);
  CHECK_FALSE(bad.items[4].passed);
}

TEST_CASE("dyadic filtration and serialization") {
  const GridFunction g = random_grid({8, 8}, 5, 0.125);
  const FiltrationTree t = dyadic_filtration(g, unit_square(), 3);
  CHECK(t.nodes.size() == 1 + 4 + 16 + 64);
  CHECK(verify_density(t, g, 4.0).passed());
  const auto j = t.to_json();
  CHECK(j["root"]["children"].size() == 4);
  CHECK(j["root"].contains("cut_axis"));
  FiltrationOptions opt;
  opt.stop.max_depth = 3;
  const FiltrationTree b = build_filtration(g, unit_square(), opt);
  const auto jb = b.to_json();
  CHECK(jb["root"]["cut_axis"] == 0);
  CHECK(jb["root"]["children"][0].contains("box"));
  const std::string svg = b.to_svg();
  CHECK(svg.find("<svg") == 0);
  std::size_t rects = 0, pos = 0;
  while ((pos = svg.find("<rect", pos)) != std::string::npos) {
    ++rects;
    ++pos;
  }
  CHECK(rects == b.leaves().size());
  CHECK_THROWS_AS(dyadic_filtration(g, make_box(0, 1, 0, 0.5), 2), Error);
}
