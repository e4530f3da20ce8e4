#include "otbv/ot1d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace otbv {

void require_equal_mass(const GridDensity& a, const GridDensity& b) {
  const double ma = mass(a), mb = mass(b);
  if (std::abs(ma - mb) > 1e-9 * std::max(1.0, std::max(ma, mb)))
    throw MassMismatch("masses differ: " + std::to_string(ma) + " vs " +
                       std::to_string(mb));
}

double w2_1d(const GridDensity& rho, const GridDensity& g) {
  if (rho.grid.dim != 1 || g.grid.dim != 1) throw ConfigError("w2_1d: 1D only");
  require_equal_mass(rho, g);
  const auto qa = quantile_table(rho);
  const auto qb = quantile_table(g);
  return std::sqrt(quantile_l2sq(qa, qb));
}

std::vector<double> monotone_map_1d(const GridDensity& rho, const GridDensity& g) {
  if (rho.grid.dim != 1 || g.grid.dim != 1)
    throw ConfigError("monotone_map_1d: 1D only");
  require_equal_mass(rho, g);
  const auto qg = quantile_table(g);
  std::vector<double> T(rho.grid.cells());
  for (std::size_t i = 0; i < T.size(); ++i) {
    const double x = rho.grid.x_of(static_cast<int>(i));
    T[i] = rho.values[i] > 0.0 ? qg(cdf(rho, x)) : x;
  }
  return T;
}

namespace {

// cumulative trapezoid of x - T(x) over cell centers, zero at `anchor`
std::vector<double> integrate_displacement(const Grid& grid,
                                           const std::vector<double>& T,
                                           int anchor) {
  const int n = grid.shape[0];
  const double h = grid.spacing;
  std::vector<double> phi(static_cast<std::size_t>(n), 0.0);
  for (int i = anchor + 1; i < n; ++i) {
    const double fa = grid.x_of(i - 1) - T[i - 1];
    const double fb = grid.x_of(i) - T[i];
    phi[i] = phi[i - 1] + 0.5 * h * (fa + fb);
  }
  for (int i = anchor - 1; i >= 0; --i) {
    const double fa = grid.x_of(i + 1) - T[i + 1];
    const double fb = grid.x_of(i) - T[i];
    phi[i] = phi[i + 1] - 0.5 * h * (fa + fb);
  }
  return phi;
}

int first_support_cell(const GridDensity& rho) {
  for (std::size_t i = 0; i < rho.values.size(); ++i)
    if (rho.values[i] > 0.0) return static_cast<int>(i);
  throw ConfigError("potentials_1d: density has no mass");
}

// linear interpolation of a per-cell field at coordinate x
double interp(const Grid& grid, const std::vector<double>& v, double x) {
  const double f = (x - grid.origin[0]) / grid.spacing;
  const int n = grid.shape[0];
  if (f <= 0.0) return v[0];
  if (f >= n - 1) return v[static_cast<std::size_t>(n - 1)];
  const int i = static_cast<int>(std::floor(f));
  const double t = f - i;
  return v[i] * (1.0 - t) + v[i + 1] * t;
}

}  // namespace

DualPotentials potentials_1d(const GridDensity& rho, const GridDensity& g) {
  if (rho.grid.dim != 1 || g.grid.dim != 1)
    throw ConfigError("potentials_1d: 1D only");
  require_equal_mass(rho, g);

  const auto T = monotone_map_1d(rho, g);
  const auto S = monotone_map_1d(g, rho);
  const int anchor = first_support_cell(rho);
  const int anchor_g = first_support_cell(g);

  auto phi = integrate_displacement(rho.grid, T, anchor);
  auto psi = integrate_displacement(g.grid, S, anchor_g);

  // gauge: phi(x0) + psi(T(x0)) = |x0 - T(x0)|^2 / 2 at the anchor cell
  const double x0 = rho.grid.x_of(anchor);
  const double t0 = T[static_cast<std::size_t>(anchor)];
  const double target = 0.5 * (x0 - t0) * (x0 - t0);
  const double shift = target - phi[static_cast<std::size_t>(anchor)] -
                       interp(g.grid, psi, t0);
  for (double& v : psi) v += shift;

  // c-transform extensions outside the supports
  std::vector<double> phi_ext = phi, psi_ext = psi;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    if (rho.values[i] > 0.0) continue;
    const double x = rho.grid.x_of(static_cast<int>(i));
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < psi.size(); ++j) {
      if (g.values[j] <= 0.0) continue;
      const double y = g.grid.x_of(static_cast<int>(j));
      best = std::min(best, 0.5 * (x - y) * (x - y) - psi[j]);
    }
    phi_ext[i] = best;
  }
  for (std::size_t j = 0; j < psi.size(); ++j) {
    if (g.values[j] > 0.0) continue;
    const double y = g.grid.x_of(static_cast<int>(j));
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < phi.size(); ++i) {
      if (rho.values[i] <= 0.0) continue;
      const double x = rho.grid.x_of(static_cast<int>(i));
      best = std::min(best, 0.5 * (x - y) * (x - y) - phi[i]);
    }
    psi_ext[j] = best;
  }

  DualPotentials duals;
  duals.source_grid = rho.grid;
  duals.target_grid = g.grid;
  duals.phi = std::move(phi_ext);
  duals.psi = std::move(psi_ext);
  // report the exact worst feasibility violation of phi(x)+psi(y) <= c(x,y)
  double worst = 0.0;
  for (std::size_t i = 0; i < duals.phi.size(); ++i) {
    const double x = rho.grid.x_of(static_cast<int>(i));
    for (std::size_t j = 0; j < duals.psi.size(); ++j) {
      const double d = x - g.grid.x_of(static_cast<int>(j));
      worst = std::max(worst, duals.phi[i] + duals.psi[j] - 0.5 * d * d);
    }
  }
  duals.slack = worst;
  return duals;
}

std::vector<double> c_transform(const std::vector<double>& chi, const Grid& grid,
                                const Grid& out_grid) {
  if (chi.size() != grid.cells()) throw ConfigError("c_transform: size mismatch");
  std::vector<double> out(out_grid.cells());
  for (std::size_t s = 0; s < out.size(); ++s) {
    const auto cs = out_grid.center(s);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < chi.size(); ++t) {
      const auto ct = grid.center(t);
      const double dx = cs[0] - ct[0], dy = cs[1] - ct[1];
      best = std::min(best, 0.5 * (dx * dx + dy * dy) - chi[t]);
    }
    out[s] = best;
  }
  return out;
}

double duality_value(const DualPotentials& duals, const GridDensity& rho,
                     const GridDensity& g) {
  double a = 0.0, b = 0.0;
  for (std::size_t i = 0; i < rho.values.size(); ++i) a += duals.phi[i] * rho.values[i];
  for (std::size_t j = 0; j < g.values.size(); ++j) b += duals.psi[j] * g.values[j];
  return a * rho.grid.cell_volume() + b * g.grid.cell_volume();
}

}  // namespace otbv
