#include "otbv/sinkhorn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "otbv/ot1d.hpp"

namespace otbv {

double EntropicKernel::cost(std::size_t i, std::size_t j) const {
  const double dx = xs[i][0] - ys[j][0], dy = xs[i][1] - ys[j][1];
  return 0.5 * (dx * dx + dy * dy);
}

std::vector<double> EntropicKernel::row_softmin(
    const std::vector<double>& v) const {
  std::vector<double> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < ys.size(); ++j)
      m = std::max(m, (v[j] - cost(i, j)) / eps);
    double s = 0.0;
    for (std::size_t j = 0; j < ys.size(); ++j)
      s += std::exp((v[j] - cost(i, j)) / eps - m);
    out[i] = -eps * (m + std::log(s));
  }
  return out;
}

std::vector<double> EntropicKernel::col_softmin(
    const std::vector<double>& u) const {
  std::vector<double> out(ys.size());
  for (std::size_t j = 0; j < ys.size(); ++j) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < xs.size(); ++i)
      m = std::max(m, (u[i] - cost(i, j)) / eps);
    double s = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i)
      s += std::exp((u[i] - cost(i, j)) / eps - m);
    out[j] = -eps * (m + std::log(s));
  }
  return out;
}

SinkhornResult sinkhorn(const GridDensity& rho, const GridDensity& g,
                        double epsilon, int max_iter, double tol) {
  if (epsilon <= 0.0) throw ConfigError("sinkhorn: epsilon must be positive");
  require_equal_mass(rho, g);

  EntropicKernel K;
  std::vector<int> src_cells, tgt_cells;
  std::vector<double> mu, nu;
  const double vr = rho.grid.cell_volume(), vg = g.grid.cell_volume();
  for (std::size_t i = 0; i < rho.values.size(); ++i)
    if (rho.values[i] > 0.0) {
      src_cells.push_back(static_cast<int>(i));
      K.xs.push_back(rho.grid.center(i));
      mu.push_back(rho.values[i] * vr);
    }
  for (std::size_t j = 0; j < g.values.size(); ++j)
    if (g.values[j] > 0.0) {
      tgt_cells.push_back(static_cast<int>(j));
      K.ys.push_back(g.grid.center(j));
      nu.push_back(g.values[j] * vg);
    }
  const double total = std::accumulate(mu.begin(), mu.end(), 0.0);
  std::vector<double> log_mu(mu.size()), log_nu(nu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) log_mu[i] = std::log(mu[i]);
  for (std::size_t j = 0; j < nu.size(); ++j) log_nu[j] = std::log(nu[j]);

  std::vector<double> u(mu.size(), 0.0), v(nu.size(), 0.0);
  std::vector<double> schedule;
  for (double e = 10.0 * epsilon; e > epsilon * 1.5; e *= 0.5)
    schedule.push_back(e);
  schedule.push_back(epsilon);

  int iterations = 0;
  double err = std::numeric_limits<double>::infinity();
  for (std::size_t lvl = 0; lvl < schedule.size(); ++lvl) {
    K.eps = schedule[lvl];
    const bool last = lvl + 1 == schedule.size();
    const int budget = last ? max_iter : 20;
    for (int it = 0; it < budget; ++it) {
      const auto smin_u = K.row_softmin(v);
      for (std::size_t i = 0; i < u.size(); ++i)
        u[i] = K.eps * log_mu[i] + smin_u[i];
      const auto smin_v = K.col_softmin(u);
      for (std::size_t j = 0; j < v.size(); ++j)
        v[j] = K.eps * log_nu[j] + smin_v[j];
      ++iterations;
      // with v fresh the column marginals are exact; check the rows
      const auto chk = K.row_softmin(v);
      err = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i)
        err += std::abs(std::exp((u[i] - chk[i]) / K.eps) - mu[i]);
      err /= total;
      if (err < tol) break;
    }
    if (last && err >= tol) throw NotConverged("scaling loop stalled", iterations, err);
  }

  SinkhornResult res;
  res.iterations = iterations;
  res.marginal_error = err;
  res.plan.source_grid = rho.grid;
  res.plan.target_grid = g.grid;
  double cost = 0.0;
  const double prune = 1e-15 * total;
  for (std::size_t i = 0; i < u.size(); ++i)
    for (std::size_t j = 0; j < v.size(); ++j) {
      const double w = std::exp((u[i] + v[j] - K.cost(i, j)) / epsilon);
      if (w > prune) {
        res.plan.entries.push_back({src_cells[i], tgt_cells[j], w});
        cost += w * K.cost(i, j);
      }
    }
  res.plan.cost = cost;

  // potentials on the full grids, soft c-transform on zero-mass cells
  const double kappa = u.empty() ? 0.0 : u[0];
  res.duals.source_grid = rho.grid;
  res.duals.target_grid = g.grid;
  res.duals.slack = std::max(err, epsilon);
  res.duals.phi.assign(rho.grid.cells(), 0.0);
  res.duals.psi.assign(g.grid.cells(), 0.0);
  for (std::size_t k = 0; k < src_cells.size(); ++k)
    res.duals.phi[static_cast<std::size_t>(src_cells[k])] = u[k] - kappa;
  for (std::size_t k = 0; k < tgt_cells.size(); ++k)
    res.duals.psi[static_cast<std::size_t>(tgt_cells[k])] = v[k] + kappa;
  for (std::size_t i = 0; i < rho.values.size(); ++i) {
    if (rho.values[i] > 0.0) continue;
    const auto x = rho.grid.center(i);
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < tgt_cells.size(); ++k) {
      const auto y = g.grid.center(static_cast<std::size_t>(tgt_cells[k]));
      const double dx = x[0] - y[0], dy = x[1] - y[1];
      m = std::max(m, (v[k] + kappa - 0.5 * (dx * dx + dy * dy)) / epsilon);
    }
    double s = 0.0;
    for (std::size_t k = 0; k < tgt_cells.size(); ++k) {
      const auto y = g.grid.center(static_cast<std::size_t>(tgt_cells[k]));
      const double dx = x[0] - y[0], dy = x[1] - y[1];
      s += std::exp((v[k] + kappa - 0.5 * (dx * dx + dy * dy)) / epsilon - m);
    }
    res.duals.phi[i] = -epsilon * (m + std::log(s));
  }
  for (std::size_t j = 0; j < g.values.size(); ++j) {
    if (g.values[j] > 0.0) continue;
    const auto y = g.grid.center(j);
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < src_cells.size(); ++k) {
      const auto x = rho.grid.center(static_cast<std::size_t>(src_cells[k]));
      const double dx = x[0] - y[0], dy = x[1] - y[1];
      m = std::max(m, (u[k] - kappa - 0.5 * (dx * dx + dy * dy)) / epsilon);
    }
    double s = 0.0;
    for (std::size_t k = 0; k < src_cells.size(); ++k) {
      const auto x = rho.grid.center(static_cast<std::size_t>(src_cells[k]));
      const double dx = x[0] - y[0], dy = x[1] - y[1];
      s += std::exp((u[k] - kappa - 0.5 * (dx * dx + dy * dy)) / epsilon - m);
    }
    res.duals.psi[j] = -epsilon * (m + std::log(s));
  }
  return res;
}

}  // namespace otbv
