#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "helpers.hpp"
#include "otbv/density_io.hpp"
#include "otbv/errors.hpp"
#include "otbv/grid.hpp"
#include "otbv/isotonic.hpp"
#include "otbv/quantile.hpp"
#include "otbv/rng.hpp"

using namespace otbv;
using namespace otbv::testing;

TEST_CASE("grid validation rejects bad parameters") {
  CHECK_THROWS_AS(Grid::line(0, 0.0, 0.1).validate(), ConfigError);
  CHECK_THROWS_AS(Grid::line(8, 0.0, -0.1).validate(), ConfigError);
  CHECK_THROWS_AS(Grid::box2d(4, 0, 0.0, 0.0, 0.1).validate(), ConfigError);
  CHECK_NOTHROW(Grid::line(8, 0.0, 0.1).validate());
}

TEST_CASE("grid geometry") {
  const Grid g = Grid::box2d(3, 2, -1.0, 2.0, 0.5);
  CHECK(g.cells() == 6);
  CHECK(g.cell_volume() == doctest::Approx(0.25));
  const auto c = g.center(4);  // iy = 1, ix = 1
  CHECK(c[0] == doctest::Approx(-0.5));
  CHECK(c[1] == doctest::Approx(2.5));
}

TEST_CASE("mass and second moment of a uniform density") {
  const Grid g = line_grid(100, 0.0, 1.0);
  GridDensity rho{g, std::vector<double>(100, 2.0)};
  CHECK(mass(rho) == doctest::Approx(2.0).epsilon(1e-12));
  // 2 * int_0^1 x^2 dx = 2/3, midpoint rule is O(h^2) here.
  CHECK(second_moment(rho) == doctest::Approx(2.0 / 3.0).epsilon(1e-4));
}

TEST_CASE("total variation closed forms") {
  const Grid g = line_grid(64, -1.0, 1.0);
  SUBCASE("interior indicator has TV twice its height") {
    const auto rho = indicator_1d(g, -0.5, 0.5, 3.0);
    CHECK(total_variation(rho) == doctest::Approx(6.0).epsilon(1e-12));
  }
  SUBCASE("indicator touching the boundary loses the outer jump") {
    const auto rho = indicator_1d(g, -2.0, 0.0, 1.0);
    CHECK(total_variation(rho) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("2D square indicator TV approximates its perimeter") {
    const Grid q = square_grid(64, -1.0, 1.0);
    GridDensity rho = GridDensity::zeros(q);
    for (int iy = 0; iy < 64; ++iy)
      for (int ix = 0; ix < 64; ++ix)
        if (std::abs(q.x_of(ix)) < 0.5 && std::abs(q.y_of(iy)) < 0.5)
          rho.values[iy * 64 + ix] = 1.0;
    // corner cells merge the two unit jumps into a single sqrt(2) one,
    // so the discrete perimeter sits within 4h of the exact one
    CHECK(std::abs(total_variation(rho) - 4.0) < 4.0 * q.spacing);
  }
}

TEST_CASE("total variation is homogeneous and subadditive") {
  const Grid g = line_grid(128, -1.0, 1.0);
  const auto a = random_smooth_density(g, 11, 0);
  const auto b = random_smooth_density(g, 11, 1);
  CHECK(total_variation(rescale_mass(a, 3.0)) ==
        doctest::Approx(3.0 * total_variation(a)).epsilon(1e-10));
  GridDensity sum{g, a.values};
  for (int i = 0; i < 128; ++i) sum.values[i] += b.values[i];
  CHECK(total_variation(sum) <=
        total_variation(a) + total_variation(b) + 1e-12);
}

TEST_CASE("rescale_mass scales mass linearly") {
  const Grid g = line_grid(32, 0.0, 1.0);
  const auto rho = random_smooth_density(g, 3, 0);
  CHECK(mass(rescale_mass(rho, 0.25)) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("pushforward") {
  const Grid g = line_grid(64, -1.0, 1.0);
  const auto rho = gaussian_1d(g, -0.3, 0.12, 1.0);
  SUBCASE("whole-cell translation shifts values exactly") {
    std::vector<std::array<double, 2>> target(64);
    const int k = 8;
    for (int i = 0; i < 64; ++i)
      target[i] = {g.x_of(i) + k * g.spacing, 0.0};
    const auto out = pushforward(rho, target);
    CHECK(mass(out) == doctest::Approx(1.0).epsilon(1e-12));
    for (int i = 0; i + k < 64; ++i)
      CHECK(out.values[i + k] == doctest::Approx(rho.values[i]).epsilon(1e-12));
  }
  SUBCASE("half-cell translation splits mass evenly") {
    std::vector<std::array<double, 2>> target(64);
    for (int i = 0; i < 64; ++i)
      target[i] = {g.x_of(i) + 0.5 * g.spacing, 0.0};
    const auto out = pushforward(rho, target);
    CHECK(mass(out) == doctest::Approx(1.0).epsilon(1e-12));
    for (int i = 1; i + 1 < 64; ++i)
      CHECK(out.values[i] == doctest::Approx(0.5 * (rho.values[i] +
                                                    rho.values[i - 1]))
                                 .epsilon(1e-12));
  }
  SUBCASE("targets far outside the box throw") {
    std::vector<std::array<double, 2>> target(64);
    for (int i = 0; i < 64; ++i) target[i] = {g.x_of(i) + 1.0, 0.0};
    CHECK_THROWS_AS(pushforward(rho, target), TargetOutsideDomain);
  }
  SUBCASE("2D bilinear split conserves mass") {
    const Grid q = square_grid(16, -1.0, 1.0);
    const auto r2 = random_smooth_density(q, 5, 0);
    std::vector<std::array<double, 2>> target(q.cells());
    for (std::size_t i = 0; i < q.cells(); ++i) {
      auto c = q.center(i);
      target[i] = {c[0] + 0.3 * q.spacing, c[1] - 0.7 * q.spacing};
    }
    CHECK(mass(pushforward(r2, target)) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("density io round trip and validation") {
  const Grid g = square_grid(8, -1.0, 1.0);
  const auto rho = random_smooth_density(g, 9, 2);
  const auto path = std::filesystem::temp_directory_path() / "otbv_rt.json";
  write_density(path, rho);
  const auto back = read_density(path);
  CHECK(back.grid == rho.grid);
  REQUIRE(back.values.size() == rho.values.size());
  for (std::size_t i = 0; i < rho.values.size(); ++i)
    CHECK(back.values[i] == rho.values[i]);  // bit-exact
  std::filesystem::remove(path);

  CHECK_THROWS_AS(density_from_json("{\"dim\":1}"), InvalidDensityFile);
  CHECK_THROWS_AS(
      density_from_json("{\"dim\":1,\"shape\":[2],\"origin\":[0.0],"
                        "\"spacing\":1.0,\"values\":[1.0,-0.5]}"),
      InvalidDensityFile);
  CHECK_THROWS_AS(density_from_json("not json"), InvalidDensityFile);
}

TEST_CASE("counter rng is deterministic and order-independent") {
  CounterRng a(42, 7), b(42, 7);
  std::vector<double> first;
  for (int i = 0; i < 10; ++i) first.push_back(a.next_double());
  for (int i = 0; i < 5; ++i) (void)b.next_u64();
  // same stream restarted reproduces the sequence from scratch
  CounterRng c(42, 7);
  for (int i = 0; i < 10; ++i) {
    const double v = c.next_double();
    CHECK(v == first[static_cast<std::size_t>(i)]);
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
  }
  CounterRng d(42, 8);
  bool differs = false;
  for (int i = 0; i < 10; ++i)
    if (d.next_double() != first[static_cast<std::size_t>(i)]) differs = true;
  CHECK(differs);
}

TEST_CASE("random smooth density is a unit-mass density") {
  const Grid g = square_grid(24, -1.0, 1.0);
  const auto rho = random_smooth_density(g, 123, 4);
  CHECK(mass(rho) == doctest::Approx(1.0).epsilon(1e-12));
  for (double v : rho.values) CHECK(v >= 0.0);
}

TEST_CASE("quantile table of a uniform density") {
  const Grid g = line_grid(50, 0.0, 1.0);
  GridDensity rho{g, std::vector<double>(50, 1.0)};
  const auto q = quantile_table(rho);
  CHECK(q.total_mass == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(q(0.25) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(q(0.9) == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(cdf(rho, 0.37) == doctest::Approx(0.37).epsilon(1e-12));
  CHECK(cdf(rho, -1.0) == doctest::Approx(0.0));
  CHECK(cdf(rho, 2.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("quantile l2 distance of a translate is a^2 M") {
  const Grid g = line_grid(256, -2.0, 2.0);
  const auto rho = indicator_1d(g, -1.0, -0.5, 2.0);
  const double a = 1.25;  // 80 cells, grid-aligned shift
  GridDensity shifted = GridDensity::zeros(g);
  for (int i = 0; i < 256; ++i) {
    const double x = g.x_of(i) - a;
    if (x > -1.0 && x < -0.5) shifted.values[i] = 2.0;
  }
  const double m = mass(rho);
  CHECK(quantile_l2sq(quantile_table(rho), quantile_table(shifted)) ==
        doctest::Approx(a * a * m).epsilon(1e-10));
}

TEST_CASE("isotonic projection") {
  SUBCASE("nondecreasing input is a fixed point") {
    PiecewiseLinear v{{0.0, 0.5, 1.0}, {0.0, 0.2, 1.0}};
    const auto out = isotonic_project(v);
    for (double q : {0.0, 0.1, 0.45, 0.8, 1.0})
      CHECK(out(q) == doctest::Approx(v(q)).epsilon(1e-12));
  }
  SUBCASE("decreasing input pools to its mean") {
    PiecewiseLinear v{{0.0, 1.0}, {1.0, 0.0}};
    const auto out = isotonic_project(v);
    for (double q : {0.0, 0.3, 0.99})
      CHECK(out(q) == doctest::Approx(0.5).epsilon(1e-10));
  }
  SUBCASE("matches a fine discrete pool-adjacent-violators oracle") {
    CounterRng rng(77, 0);
    for (int trial = 0; trial < 10; ++trial) {
      PiecewiseLinear v;
      const int k = 6;
      for (int s = 0; s <= k; ++s) {
        v.p.push_back(s / static_cast<double>(k));
        v.y.push_back(rng.uniform(-1.0, 1.0));
      }
      const auto out = isotonic_project(v);
      // discrete PAVA on a fine sampling of the same function
      const int n = 20000;
      std::vector<double> y(n), w(n, 1.0 / n);
      for (int i = 0; i < n; ++i) y[i] = v((i + 0.5) / n);
      std::vector<double> level, weight;
      std::vector<int> count;
      for (int i = 0; i < n; ++i) {
        level.push_back(y[i]);
        weight.push_back(w[i]);
        count.push_back(1);
        while (level.size() > 1 &&
               level[level.size() - 2] >= level.back()) {
          const double wsum = weight[weight.size() - 2] + weight.back();
          const double merged = (level[level.size() - 2] *
                                     weight[weight.size() - 2] +
                                 level.back() * weight.back()) /
                                wsum;
          level.pop_back();
          weight.pop_back();
          const int c = count.back();
          count.pop_back();
          level.back() = merged;
          weight.back() = wsum;
          count.back() += c;
        }
      }
      std::vector<double> oracle;
      for (std::size_t b = 0; b < level.size(); ++b)
        for (int r = 0; r < count[b]; ++r) oracle.push_back(level[b]);
      double err = 0.0;
      for (int i = 0; i < n; ++i)
        err = std::max(err, std::abs(out((i + 0.5) / n) - oracle[i]));
      CHECK(err < 5e-4);  // oracle itself is O(1/n) accurate
    }
  }
  SUBCASE("clamped projection respects bounds and monotonicity") {
    PiecewiseLinear v{{0.0, 0.25, 0.5, 1.0}, {2.0, -3.0, 0.5, 4.0}};
    const auto out = isotonic_project_clamped(v, -1.0, 1.5);
    double prev = -1e300;
    for (int i = 0; i <= 100; ++i) {
      const double q = i / 100.0;
      const double val = out(q);
      CHECK(val >= -1.0 - 1e-12);
      CHECK(val <= 1.5 + 1e-12);
      CHECK(val >= prev - 1e-12);
      prev = val;
    }
  }
}
