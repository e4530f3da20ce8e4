#include "otbv/rng.hpp"

#include <cmath>

namespace otbv {

namespace {
std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace

std::uint64_t CounterRng::next_u64() {
  const std::uint64_t v = splitmix64(splitmix64(seed_ ^ splitmix64(stream_)) + counter_);
  ++counter_;
  return v;
}

double CounterRng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double CounterRng::uniform(double lo, double hi) {
  return lo + (hi - lo) * next_double();
}

GridDensity random_smooth_density(const Grid& grid, std::uint64_t seed,
                                  std::uint64_t stream, int bumps, double total_mass) {
  CounterRng rng(seed, stream);
  const double x0 = grid.origin[0];
  const double x1 = grid.x_of(grid.shape[0] - 1);
  const double y0 = grid.origin[1];
  const double y1 = grid.dim == 2 ? grid.y_of(grid.shape[1] - 1) : 0.0;
  const double lx = x1 - x0;
  const double ly = y1 - y0;

  struct Bump {
    double cx, cy, sx, sy, w;
  };
  std::vector<Bump> bs;
  for (int b = 0; b < bumps; ++b) {
    Bump bump;
    bump.cx = rng.uniform(x0 + 0.2 * lx, x1 - 0.2 * lx);
    bump.cy = grid.dim == 2 ? rng.uniform(y0 + 0.2 * ly, y1 - 0.2 * ly) : 0.0;
    bump.sx = rng.uniform(0.04 * lx, 0.12 * lx);
    bump.sy = grid.dim == 2 ? rng.uniform(0.04 * ly, 0.12 * ly) : 1.0;
    bump.w = rng.uniform(0.3, 1.0);
    bs.push_back(bump);
  }

  GridDensity rho = GridDensity::zeros(grid);
  for (std::size_t i = 0; i < grid.cells(); ++i) {
    const auto c = grid.center(i);
    double v = 0.0;
    for (const auto& b : bs) {
      const double dx = (c[0] - b.cx) / b.sx;
      const double dy = grid.dim == 2 ? (c[1] - b.cy) / b.sy : 0.0;
      v += b.w * std::exp(-0.5 * (dx * dx + dy * dy));
    }
    rho.values[i] = v;
  }
  const double m = mass(rho);
  for (double& v : rho.values) v *= total_mass / m;
  return rho;
}

}  // namespace otbv
