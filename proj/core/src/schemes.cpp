#include "otbv/schemes.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "otbv/ot1d.hpp"

namespace otbv {

int SchemeConfig::steps() const {
  if (tau <= 0.0) throw ConfigError("scheme: tau must be positive");
  const int n = static_cast<int>(std::floor(t_final / tau + 1e-9));
  if (n < 1) throw ConfigError("scheme: t_final must cover at least one step");
  return n;
}

namespace {

double w2_between(const GridDensity& a, const GridDensity& b) {
  if (a.grid.dim == 1) return w2_1d(a, b);
  return std::sqrt(2.0 * solve_ot_lp(a, b).plan.cost);
}

ProjectionResult project_k1(const GridDensity& rho) {
  if (rho.grid.dim == 1) return project_k1_1d(rho, 1.0);
  return project_lp(rho, ConstraintField::constant(rho.grid, 1.0));
}

SchemeStep make_row(int step, double time, const GridDensity& rho,
                    double tv_pre, double w2_step, double cap) {
  SchemeStep r;
  r.step = step;
  r.time = time;
  r.mass_value = mass(rho);
  r.tv = total_variation(rho);
  r.tv_pre = tv_pre;
  r.w2_step = w2_step;
  const auto [mn, mx] =
      std::minmax_element(rho.values.begin(), rho.values.end());
  r.min_density = *mn;
  r.max_density = *mx;
  r.violation = std::max(0.0, *mx - cap);
  return r;
}

void maybe_snapshot(SchemeTrace& trace, int step, int stride,
                    const GridDensity& rho) {
  if (stride > 0 && step % stride == 0) trace.snapshots.push_back({step, rho});
}

// one implicit Euler step of rho_t = sigma * Laplacian(rho), zero-flux
// boundary, solved by conjugate gradient
GridDensity heat_step(const GridDensity& rho, double sigma, double tau) {
  const Grid& grid = rho.grid;
  const int nx = grid.shape[0];
  const int ny = grid.dim == 2 ? grid.shape[1] : 1;
  const double lam = sigma * tau / (grid.spacing * grid.spacing);
  const std::size_t n = grid.cells();

  auto apply = [&](const std::vector<double>& x, std::vector<double>& out) {
    for (int iy = 0; iy < ny; ++iy)
      for (int ix = 0; ix < nx; ++ix) {
        const std::size_t i = static_cast<std::size_t>(iy) * nx + ix;
        double acc = x[i];
        const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
        for (int k = 0; k < (grid.dim == 2 ? 4 : 2); ++k) {
          const int jx = ix + dx[k], jy = iy + dy[k];
          if (jx < 0 || jx >= nx || jy < 0 || jy >= ny) continue;
          acc += lam * (x[i] - x[static_cast<std::size_t>(jy) * nx + jx]);
        }
        out[i] = acc;
      }
  };

  std::vector<double> x = rho.values, r(n), p(n), ap(n);
  apply(x, ap);
  double rr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    r[i] = rho.values[i] - ap[i];
    rr += r[i] * r[i];
  }
  p = r;
  double b2 = 0.0;
  for (double v : rho.values) b2 += v * v;
  const double stop = 1e-20 * std::max(b2, 1e-300);
  for (int it = 0; it < 10000 && rr > stop; ++it) {
    apply(p, ap);
    double pap = 0.0;
    for (std::size_t i = 0; i < n; ++i) pap += p[i] * ap[i];
    const double alpha = rr / pap;
    double rr_new = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
      rr_new += r[i] * r[i];
    }
    const double beta = rr_new / rr;
    rr = rr_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
  }
  for (double& v : x) v = std::max(v, 0.0);
  return GridDensity(rho.grid, std::move(x));
}

}  // namespace

SchemeTrace evolve_set_growth(const GridDensity& rho0,
                              const SchemeConfig& cfg) {
  for (double v : rho0.values)
    if (std::min(std::abs(v), std::abs(v - 1.0)) > 1e-9)
      throw ConfigError("set growth: initial density must be an indicator");
  const int n = cfg.steps();
  const double capacity =
      static_cast<double>(rho0.grid.cells()) * rho0.grid.cell_volume();

  SchemeTrace trace;
  GridDensity rho = rho0;
  trace.rows.push_back(make_row(0, 0.0, rho, total_variation(rho), 0.0, 1.0));
  maybe_snapshot(trace, 0, cfg.snapshot_stride, rho);
  for (int k = 1; k <= n; ++k) {
    if (mass(rho) * (1.0 + cfg.tau) > capacity * (1.0 - 1e-9)) {
      trace.truncated = true;
      break;
    }
    const GridDensity scaled = rescale_mass(rho, 1.0 + cfg.tau);
    const double tv_pre = total_variation(scaled);
    ProjectionResult proj = project_k1(scaled);
    rho = std::move(proj.rho);
    trace.rows.push_back(make_row(k, k * cfg.tau, rho, tv_pre,
                                  std::sqrt(2.0 * proj.transport_cost), 1.0));
    maybe_snapshot(trace, k, cfg.snapshot_stride, rho);
  }
  return trace;
}

SchemeTrace evolve_crowd(const GridDensity& rho0, const SchemeConfig& cfg) {
  const Grid& grid = rho0.grid;
  if (!cfg.velocity.empty() && cfg.velocity.size() != grid.cells())
    throw ConfigError("crowd: velocity field size mismatch");
  const int n = cfg.steps();

  SchemeTrace trace;
  GridDensity rho = rho0;
  trace.rows.push_back(make_row(0, 0.0, rho, total_variation(rho), 0.0, 1.0));
  maybe_snapshot(trace, 0, cfg.snapshot_stride, rho);
  for (int k = 1; k <= n; ++k) {
    GridDensity moved = rho;
    if (!cfg.velocity.empty()) {
      // motion cannot exit the box: targets clamp to the walls
      const double lo0 = grid.origin[0];
      const double hi0 = grid.origin[0] + (grid.shape[0] - 1) * grid.spacing;
      const double lo1 = grid.dim == 2 ? grid.origin[1] : 0.0;
      const double hi1 = grid.dim == 2
                             ? grid.origin[1] + (grid.shape[1] - 1) * grid.spacing
                             : 0.0;
      std::vector<std::array<double, 2>> target(grid.cells());
      for (std::size_t i = 0; i < target.size(); ++i) {
        const auto c = grid.center(i);
        target[i] = {std::clamp(c[0] + cfg.tau * cfg.velocity[i][0], lo0, hi0),
                     grid.dim == 2
                         ? std::clamp(c[1] + cfg.tau * cfg.velocity[i][1], lo1, hi1)
                         : 0.0};
      }
      moved = pushforward(rho, target);
    }
    if (cfg.sigma > 0.0) moved = heat_step(moved, cfg.sigma, cfg.tau);
    const double tv_pre = total_variation(moved);
    GridDensity next = moved;
    double mx = 0.0;
    for (double v : moved.values) mx = std::max(mx, v);
    if (mx > 1.0 + 1e-12) next = project_k1(moved).rho;
    const double step_len = w2_between(rho, next);
    rho = std::move(next);
    trace.rows.push_back(make_row(k, k * cfg.tau, rho, tv_pre, step_len, 1.0));
    maybe_snapshot(trace, k, cfg.snapshot_stride, rho);
  }
  return trace;
}

SchemeTrace evolve_porous_medium(const GridDensity& rho0,
                                 const SchemeConfig& cfg) {
  const int n = cfg.steps();
  SchemeTrace trace;
  GridDensity rho = rho0;
  const double inf = std::numeric_limits<double>::infinity();
  const double cap = std::isfinite(cfg.integrand.upper) ? cfg.integrand.upper : inf;
  trace.rows.push_back(make_row(0, 0.0, rho, total_variation(rho), 0.0, cap));
  maybe_snapshot(trace, 0, cfg.snapshot_stride, rho);
  for (int k = 1; k <= n; ++k) {
    GridDensity next =
        jko_step(rho, cfg.integrand, cfg.tau, cfg.jko_method, cfg.jko_options);
    const double step_len = w2_between(rho, next);
    const double tv_pre = total_variation(rho);
    rho = std::move(next);
    trace.rows.push_back(make_row(k, k * cfg.tau, rho, tv_pre, step_len, cap));
    maybe_snapshot(trace, k, cfg.snapshot_stride, rho);
  }
  return trace;
}

std::string trace_csv(const SchemeTrace& trace) {
  std::ostringstream os;
  os.precision(17);
  os << "step,time,mass,tv,tv_pre,w2_step,min,max,violation\n";
  for (const auto& r : trace.rows)
    os << r.step << ',' << r.time << ',' << r.mass_value << ',' << r.tv << ','
       << r.tv_pre << ',' << r.w2_step << ',' << r.min_density << ','
       << r.max_density << ',' << r.violation << '\n';
  return os.str();
}

}  // namespace otbv
