#include <doctest.h>

#include <cmath>
#include <random>

#include "maxlab/bellman.hpp"
#include "maxlab/covering.hpp"
#include "maxlab/error.hpp"
#include "maxlab/search.hpp"
#include "oracles.hpp"

using namespace maxlab;
using namespace maxlab::testing;

namespace {

GridFunction chi_on(std::size_t n, double lo, double hi) {
  const double h = (hi - lo) / static_cast<double>(n);
  return GridFunction::sample({n}, {lo, 0, 0}, h, [](const Point& x) {
    return (x[0] >= 0.0 && x[0] < 1.0) ? 1.0 : 0.0;
  });
}

RatioOperator lambda_op(double lambda, BodyKind family = BodyKind::box) {
  RatioOperator op;
  op.spec.lambda = lambda;
  op.spec.family = family;
  if (family != BodyKind::box) op.spec.mode = SearchMode::ladder;
  return op;
}

}  // namespace

TEST_CASE("indicator ratio for uncentered intervals") {
  const RatioReport r = ratio(chi_on(4096, -64.0, 65.0), RatioOperator::uncentered_box(), 2.0);
  CHECK(rel_diff(r.ratio, std::sqrt(3.0)) < 0.02);
  CHECK(r.ratio >= std::sqrt(2.0));
  CHECK(rel_diff(r.ratio_with_tail, std::sqrt(3.0)) < 0.002);
  CHECK(r.constant.value == doctest::Approx(std::sqrt(2.0)));
  CHECK(*r.truncation_radius == doctest::Approx(64.0).epsilon(1e-3));
}

TEST_CASE("indicator ratio converges under refinement") {
  double prev = INFINITY;
  for (std::size_t n : {516u, 1032u, 2064u, 4128u}) {
    // 4 cells per unit and up: the indicator edges fall on cell faces.
    const RatioReport r = ratio(chi_on(n, -64.0, 65.0), RatioOperator::uncentered_box(), 2.0);
    const double err = std::abs(r.ratio_with_tail - std::sqrt(3.0));
    CHECK(err < prev);
    prev = err;
  }
}

TEST_CASE("tail estimate for a single interval") {
  // f = chi_[0,1] with domain [-D, 1 + D]: M f = 1/x right of 1, so the
  // missing part of ||M f||_2^2 is 2 / (1 + D).
  const double D = 3.0;
  const GridFunction g = chi_on(1, 0.0, 1.0);
  RatioOptions ro;
  ro.margin_cells = 3;
  const RatioReport r = ratio(g, RatioOperator::uncentered_box(), 2.0, ro);
  CHECK(r.tail_estimate == doctest::Approx(2.0 / (1.0 + D)).epsilon(1e-14));

  const RatioReport one = ratio(g, RatioOperator::one_sided_right(), 2.0, ro);
  CHECK(one.tail_estimate == doctest::Approx(1.0 / (1.0 + D)).epsilon(1e-14));
}

TEST_CASE("tail estimate for a square support") {
  // Direct 2D quadrature of (1 / |R(x)|)^2 outside the domain.
  const GridFunction g = GridFunction::sample({1, 1}, {}, 1.0, [](const Point&) { return 1.0; });
  RatioOptions ro;
  ro.margin_cells = 1;
  const RatioReport r = ratio(g, RatioOperator::uncentered_box(), 2.0, ro);
  const auto len = [](double x) { return std::max(1.0, x) - std::min(0.0, x); };
  // Midpoint rule after x = 1/2 + tan(pi s / 2), s in (-1, 1).
  const int m = 3000;
  const double pi = std::acos(-1.0);
  std::vector<double> xs(m), ws(m);
  for (int i = 0; i < m; ++i) {
    const double s = -1.0 + (i + 0.5) * 2.0 / m;
    const double c = std::cos(pi * s / 2);
    xs[i] = 0.5 + std::tan(pi * s / 2);
    ws[i] = (2.0 / m) * (pi / 2) / (c * c);
  }
  long double acc = 0.0L;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      const double x = xs[i], y = xs[j];
      if (x > -1 && x < 2 && y > -1 && y < 2) continue;
      const double v = 1.0 / (len(x) * len(y));
      acc += v * v * ws[i] * ws[j];
    }
  }
  CHECK(r.tail_estimate == doctest::Approx(static_cast<double>(acc)).epsilon(1e-3));
}

TEST_CASE("dyadic indicator ratio") {
  const GridFunction g = GridFunction::sample({256}, {}, 1.0, [](const Point& x) {
    return x[0] < 1.0 ? 1.0 : 0.0;
  });
  const RatioReport r = ratio(g, RatioOperator::dyadic_cubes(), 2.0);
  const double expected = std::sqrt(1.5);
  CHECK(rel_diff(r.ratio, expected) < 0.01);
  // Shell sum 1 + sum_{m=1}^{8} 2^{-m-1} on the root.
  double shells = 1.0;
  for (int m = 1; m <= 8; ++m) shells += std::ldexp(1.0, -m - 1);
  CHECK(r.ratio == doctest::Approx(std::sqrt(shells)).epsilon(1e-14));
  CHECK(r.ratio_with_tail == doctest::Approx(expected).epsilon(1e-14));
  CHECK(r.constant.value == doctest::Approx(theorem_constants(2.0, 2.0, 1).dyadic).epsilon(1e-15));
  CHECK_THROWS_AS(ratio(random_grid({12}, 1), RatioOperator::dyadic_cubes(), 2.0), Error);
}

TEST_CASE("ratio is at least one for every operator") {
  std::vector<RatioOperator> ops = {RatioOperator::uncentered_box(), lambda_op(0.0),
                                    lambda_op(0.5), lambda_op(1.0, BodyKind::ball2)};
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const GridFunction g1 = random_grid({16}, seed, 1.0 / 16);
    const GridFunction g2 = random_grid({8, 8}, seed, 1.0 / 8);
    for (const auto& op : ops) {
      for (double p : {1.5, 2.0, 3.0}) {
        CHECK(ratio(g1, op, p).ratio >= 1.0 - 1e-12);
        CHECK(ratio(g2, op, p).ratio >= 1.0 - 1e-12);
      }
    }
    CHECK(ratio(g1, RatioOperator::one_sided_right(), 2.0).ratio >= 1.0 - 1e-12);
    CHECK(ratio(random_grid({16, 16}, seed), RatioOperator::dyadic_cubes(), 2.0).ratio >=
          1.0 - 1e-12);
  }
  CHECK_THROWS_AS(ratio(GridFunction::zeros({4}, {}, 1.0), RatioOperator::uncentered_box(), 2.0),
                  Error);
  CHECK_THROWS_AS(ratio(random_grid({4}, 1), RatioOperator::uncentered_box(), 1.0), Error);
}

TEST_CASE("uncentered box ratio stays above the parallelepiped constant") {
  const double floor = std::sqrt(2.0) * (1.0 - 0.02);
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    RatioOptions ro;
    ro.margin_cells = 64;
    ro.refine = 2;
    CHECK(ratio(random_grid({32}, seed, 1.0 / 32), RatioOperator::uncentered_box(), 2.0, ro)
              .ratio_with_tail >= floor);
    ro.margin_cells = 4;
    ro.refine = 1;
    const RatioReport r2 =
        ratio(random_grid({6, 6}, seed, 1.0 / 6), RatioOperator::uncentered_box(), 2.0, ro);
    INFO(r2.to_json().dump());
    CHECK(r2.ratio_with_tail >= floor);
  }
}

TEST_CASE("reference constants") {
  CHECK(reference_constant(RatioOperator::uncentered_box(), 2, 2.0).name == "parallelepipeds");
  CHECK(reference_constant(lambda_op(1.0, BodyKind::ball2), 2, 2.0).value ==
        doctest::Approx(uncentered_constant(2.0, 25.0)));
  CHECK(reference_constant(lambda_op(1.0, BodyKind::ball2), 1, 2.0).value ==
        doctest::Approx(std::sqrt(2.0)));
  CHECK(reference_constant(lambda_op(0.5), 2, 2.0).value == 1.0);
  CHECK(reference_constant(RatioOperator::dyadic_cubes(), 2, 2.0).value ==
        doctest::Approx(std::sqrt(15.0 / 12.0)));
}

TEST_CASE("annealing is deterministic and its trace never increases") {
  AnnealOptions opt;
  opt.steps = 1500;
  const auto a = minimize_ratio(RatioOperator::uncentered_box(), 2.0, {64}, opt, 7);
  const auto b = minimize_ratio(RatioOperator::uncentered_box(), 2.0, {64}, opt, 7);
  const auto c = minimize_ratio(RatioOperator::uncentered_box(), 2.0, {64}, opt, 8);
  CHECK(a.trace == b.trace);
  CHECK(a.report.to_json() == b.report.to_json());
  CHECK(a.trace != c.trace);
  REQUIRE(a.trace.size() >= 2);
  for (std::size_t i = 1; i < a.trace.size(); ++i) {
    CHECK(a.trace[i].second <= a.trace[i - 1].second);
    CHECK(a.trace[i].first > a.trace[i - 1].first);
  }
  CHECK(a.best_objective < a.trace.front().second);
  CHECK(a.report.ratio_with_tail >= std::sqrt(2.0) * 0.98);
  CHECK(a.trace_tsv().rfind("step\tratio\n", 0) == 0);

  const auto chains = minimize_ratio_chains(RatioOperator::uncentered_box(), 2.0, {64}, opt, {7, 8});
  REQUIRE(chains.size() == 2);
  CHECK(chains[0].trace == a.trace);
  CHECK(chains[1].trace == c.trace);
  CHECK_THROWS_AS(minimize_ratio(RatioOperator::uncentered_box(), 2.0, {}, opt, 1), Error);
}

TEST_CASE("dyadic search never goes below the dyadic constant") {
  AnnealOptions opt;
  opt.steps = 2000;
  const auto r = minimize_ratio(RatioOperator::dyadic_cubes(), 2.0, {64}, opt, 3);
  const double k = std::sqrt(1.5);
  CHECK(r.trace.front().second == doctest::Approx(k).epsilon(1e-14));
  CHECK(r.best_objective >= k * (1.0 - 1e-12));
  CHECK(r.report.ratio_with_tail >= k * (1.0 - 1e-12));
}

TEST_CASE("level identity for the one-sided maximal function") {
  const GridFunction g = chi01(8, -2.0, 3.0);
  const GrafakosReport r = grafakos_check(g, {0.5, 1.0, 2.0});
  CHECK(r.rows[0].lhs == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.rows[0].rhs == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.rows[1].lhs == 0.0);
  CHECK(r.rows[1].rhs == 0.0);
  CHECK(r.rows[2].lhs == 0.0);

  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const GridFunction f = random_grid({40}, seed, 0.05);
    const double h = f.cell_size();
    std::vector<double> ts = geometric_ladder(0.02, 1.2 * f.max_value(), 20);
    const GrafakosReport rep = grafakos_check(f, ts);
    CHECK(rep.max_residual <= 0.01 + 2.0 * h);
  }
  CHECK_THROWS_AS(grafakos_check(random_grid({3, 3}, 1), {0.5}), Error);
  CHECK_THROWS_AS(grafakos_check(g, {0.0}), Error);
}

TEST_CASE("almost centered bound") {
  // Independent form: A^p = (a + 1 + k) / (a + c), with a the eta term,
  // c = (1 - eps)^{-n-p} and k = 1 / (B (p - 1)).
  const int n = 1;
  const double p = 2.0, lambda = 0.5, eps = 0.01, eta = 0.1, B = 5.0;
  const double a = p * std::pow(lambda, n * (p - 1.0)) / (eta * (p - 1.0));
  const double c = 1.0 / std::pow(1.0 - eps, n + p);
  const double k = 1.0 / (B * (p - 1.0));
  const AlmostCenteredBound r = almost_centered_bound(n, p, lambda, eps, eta, B);
  REQUIRE(r.power);
  CHECK(*r.power == doctest::Approx((a + 1.0 + k) / (a + c)).epsilon(1e-14));
  CHECK(*r.power > 1.0);
  CHECK(*r.constant == doctest::Approx(std::sqrt(*r.power)).epsilon(1e-15));

  const AlmostCenteredBound lim = almost_centered_bound(2, 2.0, 0.5, 1e-12, 1e15, 25.0);
  CHECK(*lim.power == doctest::Approx(1.0 + 1.0 / 25.0).epsilon(1e-9));
  CHECK(*lim.constant == doctest::Approx(uncentered_constant(2.0, 25.0)).epsilon(1e-9));

  const AlmostCenteredBound bad = almost_centered_bound(1, 2.0, 0.5, 0.5, 0.1, 5.0);
  CHECK_FALSE(bad.power);
  CHECK_FALSE(bad.diagnostic.empty());

  const AlmostCenteredBound again = almost_centered_bound(n, p, lambda, eps, eta, B);
  CHECK(*again.power == *r.power);
  CHECK_THROWS_AS(almost_centered_bound(1, 2.0, 1.0, 0.1, 0.1, 5.0), Error);
  CHECK_THROWS_AS(almost_centered_bound(1, 2.0, 0.0, 0.1, 0.1, 5.0), Error);
}
