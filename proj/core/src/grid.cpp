#include "otbv/grid.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

namespace otbv {

Grid Grid::line(int n, double x0, double h) {
  Grid g;
  g.dim = 1;
  g.shape = {n, 1};
  g.origin = {x0, 0.0};
  g.spacing = h;
  g.validate();
  return g;
}

Grid Grid::box2d(int nx, int ny, double x0, double y0, double h) {
  Grid g;
  g.dim = 2;
  g.shape = {nx, ny};
  g.origin = {x0, y0};
  g.spacing = h;
  g.validate();
  return g;
}

void Grid::validate() const {
  if (dim != 1 && dim != 2) throw ConfigError("Grid: dim must be 1 or 2");
  if (spacing <= 0) throw ConfigError("Grid: spacing must be positive");
  if (shape[0] < 2) throw ConfigError("Grid: shape components must be >= 2");
  if (dim == 2 && shape[1] < 2) throw ConfigError("Grid: shape components must be >= 2");
}

std::array<double, 2> Grid::center(std::size_t idx) const {
  if (dim == 1) return {origin[0] + static_cast<double>(idx) * spacing, 0.0};
  const int ix = static_cast<int>(idx % static_cast<std::size_t>(shape[0]));
  const int iy = static_cast<int>(idx / static_cast<std::size_t>(shape[0]));
  return {origin[0] + ix * spacing, origin[1] + iy * spacing};
}

GridDensity::GridDensity(Grid g, std::vector<double> v)
    : grid(g), values(std::move(v)) {
  grid.validate();
  if (values.size() != grid.cells())
    throw ConfigError("GridDensity: value count does not match grid");
  for (double x : values)
    if (!(x >= 0.0) || !std::isfinite(x))
      throw ConfigError("GridDensity: values must be finite and nonnegative");
}

GridDensity GridDensity::zeros(const Grid& g) {
  GridDensity d;
  d.grid = g;
  d.values.assign(g.cells(), 0.0);
  return d;
}

ConstraintField ConstraintField::constant(const Grid& g, double c) {
  ConstraintField f;
  f.grid = g;
  f.values.assign(g.cells(), c);
  return f;
}

double mass(const GridDensity& rho) {
  double s = 0.0;
  for (double v : rho.values) s += v;
  return s * rho.grid.cell_volume();
}

double second_moment(const GridDensity& rho) {
  double s = 0.0;
  for (std::size_t i = 0; i < rho.values.size(); ++i) {
    const auto c = rho.grid.center(i);
    s += rho.values[i] * (c[0] * c[0] + c[1] * c[1]);
  }
  return s * rho.grid.cell_volume();
}

double total_variation(const GridDensity& rho) {
  const Grid& g = rho.grid;
  if (g.dim == 1) {
    double tv = 0.0;
    for (int i = 0; i + 1 < g.shape[0]; ++i)
      tv += std::abs(rho.values[i + 1] - rho.values[i]);
    return tv;
  }
  const int nx = g.shape[0], ny = g.shape[1];
  auto at = [&](int ix, int iy) -> double {
    if (ix < 0 || iy < 0 || ix >= nx || iy >= ny) return 0.0;
    return rho.values[static_cast<std::size_t>(iy) * nx + ix];
  };
  double tv = 0.0;
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix) {
      const double dx = at(ix + 1, iy) - at(ix, iy);
      const double dy = at(ix, iy + 1) - at(ix, iy);
      tv += std::hypot(dx, dy);
    }
  return tv * g.spacing;
}

GridDensity rescale_mass(const GridDensity& rho, double lambda) {
  if (!(lambda > 0)) throw ConfigError("rescale_mass: lambda must be positive");
  GridDensity out = rho;
  for (double& v : out.values) v *= lambda;
  return out;
}

GridDensity pushforward(const GridDensity& rho,
                        const std::vector<std::array<double, 2>>& target) {
  const Grid& g = rho.grid;
  if (target.size() != g.cells())
    throw ConfigError("pushforward: one target per cell required");
  GridDensity out = GridDensity::zeros(g);
  const int nx = g.shape[0];
  const int ny = g.dim == 2 ? g.shape[1] : 1;
  const double h = g.spacing;

  auto splat = [&](int ix, int iy, double w) {
    // clamp: mass splatted at most one cell outside the box sticks to the edge
    if (ix < 0) ix = 0;
    if (iy < 0) iy = 0;
    if (ix >= nx) ix = nx - 1;
    if (iy >= ny) iy = ny - 1;
    out.values[static_cast<std::size_t>(iy) * nx + ix] += w;
  };

  for (std::size_t i = 0; i < g.cells(); ++i) {
    const double m = rho.values[i];
    if (m == 0.0) continue;
    const double fx = (target[i][0] - g.origin[0]) / h;
    const double fy = g.dim == 2 ? (target[i][1] - g.origin[1]) / h : 0.0;
    if (fx < -1.0 || fx > nx || (g.dim == 2 && (fy < -1.0 || fy > ny)))
      throw TargetOutsideDomain("pushforward: target " + std::to_string(target[i][0]) +
                                "," + std::to_string(target[i][1]) +
                                " exits the box by more than one cell");
    const int ix = static_cast<int>(std::floor(fx));
    const double tx = fx - ix;
    if (g.dim == 1) {
      splat(ix, 0, m * (1.0 - tx));
      splat(ix + 1, 0, m * tx);
    } else {
      const int iy = static_cast<int>(std::floor(fy));
      const double ty = fy - iy;
      splat(ix, iy, m * (1.0 - tx) * (1.0 - ty));
      splat(ix + 1, iy, m * tx * (1.0 - ty));
      splat(ix, iy + 1, m * (1.0 - tx) * ty);
      splat(ix + 1, iy + 1, m * tx * ty);
    }
  }
  return out;
}

double l1_distance(const GridDensity& a, const GridDensity& b) {
  if (!(a.grid == b.grid)) throw ConfigError("l1_distance: grids differ");
  double s = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i)
    s += std::abs(a.values[i] - b.values[i]);
  return s * a.grid.cell_volume();
}

}  // namespace otbv
