#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "otbv/grid.hpp"
#include "otbv/rng.hpp"

namespace otbv::testing {

inline Grid line_grid(int n, double left, double right) {
  const double h = (right - left) / n;
  return Grid::line(n, left + 0.5 * h, h);
}

inline Grid square_grid(int n, double left, double right) {
  const double h = (right - left) / n;
  return Grid::box2d(n, n, left + 0.5 * h, left + 0.5 * h, h);
}

inline GridDensity gaussian_1d(const Grid& grid, double center, double sigma,
                               double mass) {
  GridDensity g{grid, std::vector<double>(grid.cells(), 0.0)};
  for (int i = 0; i < grid.cells(); ++i) {
    const double x = grid.x_of(i);
    const double v = std::exp(-0.5 * (x - center) * (x - center) /
                              (sigma * sigma));
    g.values[i] = v < 1e-14 ? 0.0 : v;
  }
  return rescale_mass(g, mass / otbv::mass(g));
}

inline GridDensity indicator_1d(const Grid& grid, double a, double b,
                                double height) {
  GridDensity g{grid, std::vector<double>(grid.cells(), 0.0)};
  for (int i = 0; i < grid.cells(); ++i) {
    const double x = grid.x_of(i);
    if (x > a && x < b) g.values[i] = height;
  }
  return g;
}

inline GridDensity clipped_smooth(const Grid& grid, std::uint64_t seed,
                                  std::uint64_t stream, double mass,
                                  int bumps = 3) {
  GridDensity g = random_smooth_density(grid, seed, stream, bumps, mass);
  double peak = 0.0;
  for (double v : g.values) peak = std::max(peak, v);
  for (double& v : g.values)
    if (v < 1e-10 * peak) v = 0.0;
  return rescale_mass(g, mass / otbv::mass(g));
}

inline double linf(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace otbv::testing
