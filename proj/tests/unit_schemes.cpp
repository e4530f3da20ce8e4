#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "helpers.hpp"
#include "otbv/errors.hpp"
#include "otbv/ot1d.hpp"
#include "otbv/schemes.hpp"

using namespace otbv;
using namespace otbv::testing;

TEST_CASE("steps validation") {
  SchemeConfig cfg;
  cfg.tau = 0.1;
  cfg.t_final = 0.35;
  CHECK(cfg.steps() == 3);
  cfg.t_final = 0.05;
  CHECK_THROWS_AS(cfg.steps(), ConfigError);
  cfg.tau = -1.0;
  CHECK_THROWS_AS(cfg.steps(), ConfigError);
}

TEST_CASE("set growth on an interval multiplies its length by 1+tau") {
  const Grid g = line_grid(400, -1.0, 3.0);  // h = 0.01
  const auto rho0 = indicator_1d(g, 0.0, 1.0, 1.0);
  SchemeConfig cfg;
  cfg.kind = SchemeKind::set_growth;
  cfg.tau = 0.1;
  cfg.t_final = 0.3;
  const auto trace = evolve_set_growth(rho0, cfg);
  REQUIRE(trace.rows.size() == 4);
  CHECK(!trace.truncated);
  for (int k = 0; k <= 3; ++k) {
    const auto& row = trace.rows[static_cast<std::size_t>(k)];
    CHECK(row.mass_value ==
          doctest::Approx(std::pow(1.1, k)).epsilon(1e-9));
    CHECK(row.max_density <= 1.0 + 1e-9);
    CHECK(row.violation <= 1e-9);
  }
  // support length from the last snapshot
  REQUIRE(!trace.snapshots.empty());
  const auto& last = trace.snapshots.back().second;
  double length = 0.0;
  for (double v : last.values)
    if (v > 0.5) length += g.spacing;
  CHECK(std::abs(length - std::pow(1.1, 3)) <= 2.0 * g.spacing);
  // iterates are indicators up to the two cells cut by the interval ends
  int fractional = 0;
  for (double v : last.values)
    if (std::min(v, std::abs(1.0 - v)) > 1e-6) ++fractional;
  CHECK(fractional <= 2);
}

TEST_CASE("set growth truncates when the box fills up") {
  const Grid g = line_grid(32, 0.0, 1.0);
  const auto rho0 = indicator_1d(g, -0.01, 0.95, 1.0);
  SchemeConfig cfg;
  cfg.tau = 0.1;
  cfg.t_final = 0.5;
  const auto trace = evolve_set_growth(rho0, cfg);
  CHECK(trace.truncated);
}

TEST_CASE("crowd scheme with zero velocity and no diffusion is constant") {
  const Grid g = line_grid(64, -1.0, 1.0);
  const auto rho0 = gaussian_1d(g, 0.0, 0.2, 0.4);  // peak below the cap
  SchemeConfig cfg;
  cfg.kind = SchemeKind::crowd;
  cfg.tau = 0.05;
  cfg.t_final = 0.2;
  const auto trace = evolve_crowd(rho0, cfg);
  REQUIRE(!trace.snapshots.empty());
  CHECK(l1_distance(trace.snapshots.back().second, rho0) < 1e-12);
  for (const auto& row : trace.rows) CHECK(row.w2_step < 1e-12);
}

TEST_CASE("crowd scheme transports along a constant velocity") {
  const Grid g = line_grid(256, -2.0, 2.0);
  const auto rho0 = gaussian_1d(g, -0.8, 0.15, 0.3);  // peak below the cap
  SchemeConfig cfg;
  cfg.kind = SchemeKind::crowd;
  cfg.tau = 0.05;
  cfg.t_final = 0.5;
  cfg.velocity.assign(g.cells(), {1.0, 0.0});
  const auto trace = evolve_crowd(rho0, cfg);
  const auto& final_rho = trace.snapshots.back().second;
  CHECK(mass(final_rho) == doctest::Approx(0.3).epsilon(1e-9));
  // after 10 steps of tau v the bump sits 0.5 to the right
  const auto want = gaussian_1d(g, -0.3, 0.15, 0.3);
  CHECK(w2_1d(final_rho, want) < 0.02);
  for (const auto& row : trace.rows)
    if (row.step > 0)
      CHECK(row.w2_step == doctest::Approx(0.05).epsilon(0.05));
}

TEST_CASE("crowd scheme saturates against the cap") {
  // strong leftward drift against the wall piles mass into a unit block
  const Grid g = line_grid(128, -1.0, 1.0);
  const auto rho0 = gaussian_1d(g, 0.4, 0.2, 0.6);
  SchemeConfig cfg;
  cfg.kind = SchemeKind::crowd;
  cfg.tau = 0.05;
  cfg.t_final = 1.5;
  cfg.velocity.assign(g.cells(), {-1.0, 0.0});
  const auto trace = evolve_crowd(rho0, cfg);
  const auto& final_rho = trace.snapshots.back().second;
  CHECK(mass(final_rho) == doctest::Approx(0.6).epsilon(1e-9));
  for (double v : final_rho.values) CHECK(v <= 1.0 + 1e-7);
  // the pile is the indicator of [-1, -0.4]
  const auto want = indicator_1d(g, -1.01, -0.4, 1.0);
  CHECK(l1_distance(final_rho, want) < 0.05);
}

TEST_CASE("crowd diffusion conserves mass") {
  const Grid g = square_grid(24, -1.0, 1.0);
  const auto rho0 = random_smooth_density(g, 77, 0);
  SchemeConfig cfg;
  cfg.kind = SchemeKind::crowd;
  cfg.tau = 0.02;
  cfg.t_final = 0.1;
  cfg.sigma = 0.05;
  const auto trace = evolve_crowd(rho0, cfg);
  for (const auto& row : trace.rows)
    CHECK(row.mass_value == doctest::Approx(1.0).epsilon(1e-6));
  // diffusion smooths: total variation decreases
  CHECK(trace.rows.back().tv < trace.rows.front().tv);
}

TEST_CASE("porous medium flow spreads and keeps mass") {
  const Grid g = line_grid(128, -2.0, 2.0);
  const auto rho0 = gaussian_1d(g, 0.0, 0.25, 1.0);
  SchemeConfig cfg;
  cfg.kind = SchemeKind::porous_medium;
  cfg.tau = 2e-3;
  cfg.t_final = 2e-2;
  cfg.integrand = ConvexIntegrand::power(2.0);
  cfg.jko_method = JkoMethod::entropic;
  cfg.jko_options.eps = 5e-5;
  const auto trace = evolve_porous_medium(rho0, cfg);
  for (const auto& row : trace.rows) {
    CHECK(row.mass_value == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(row.min_density >= 0.0);
  }
  CHECK(trace.rows.back().max_density < trace.rows.front().max_density);
  CHECK(trace.rows.back().tv < trace.rows.front().tv);
  CHECK(second_moment(trace.snapshots.back().second) >
        second_moment(rho0));
}

TEST_CASE("trace csv layout") {
  SchemeTrace empty;
  CHECK(trace_csv(empty) ==
        "step,time,mass,tv,tv_pre,w2_step,min,max,violation\n");

  const Grid g = line_grid(128, -1.0, 2.0);
  const auto rho0 = indicator_1d(g, 0.0, 1.0, 1.0);
  SchemeConfig cfg;
  cfg.tau = 0.1;
  cfg.t_final = 0.2;
  const auto trace = evolve_set_growth(rho0, cfg);
  std::istringstream csv(trace_csv(trace));
  std::string line;
  int rows = 0;
  while (std::getline(csv, line)) {
    if (rows == 0)
      CHECK(line == "step,time,mass,tv,tv_pre,w2_step,min,max,violation");
    else
      CHECK(std::count(line.begin(), line.end(), ',') == 8);
    ++rows;
  }
  CHECK(rows == static_cast<int>(trace.rows.size()) + 1);
}
