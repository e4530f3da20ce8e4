#include "otbv/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include <json.hpp>

#include "otbv/ot1d.hpp"

namespace otbv {

namespace {

std::string digest_of(std::initializer_list<const std::vector<double>*> data) {
  std::uint64_t h = 1469598103934665603ull;
  auto eat = [&h](const void* p, std::size_t n) {
    const unsigned char* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ull;
    }
  };
  for (const auto* v : data)
    if (v && !v->empty()) eat(v->data(), v->size() * sizeof(double));
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

DualPotentials potentials_of(const GridDensity& rho, const GridDensity& g) {
  if (rho.grid.dim == 1 && g.grid.dim == 1) return potentials_1d(rho, g);
  return solve_ot_lp(rho, g).duals;
}

// centered differences, one-sided at the box edges
std::vector<std::array<double, 2>> gradient(const Grid& grid,
                                            const std::vector<double>& v) {
  const int nx = grid.shape[0];
  const int ny = grid.dim == 2 ? grid.shape[1] : 1;
  const double h = grid.spacing;
  std::vector<std::array<double, 2>> out(grid.cells(), {0.0, 0.0});
  auto at = [&](int ix, int iy) { return static_cast<std::size_t>(iy) * nx + ix; };
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix) {
      const std::size_t i = at(ix, iy);
      const int xl = std::max(ix - 1, 0), xr = std::min(ix + 1, nx - 1);
      out[i][0] = (v[at(xr, iy)] - v[at(xl, iy)]) / ((xr - xl) * h);
      if (grid.dim == 2) {
        const int yl = std::max(iy - 1, 0), yr = std::min(iy + 1, ny - 1);
        out[i][1] = (v[at(ix, yr)] - v[at(ix, yl)]) / ((yr - yl) * h);
      }
    }
  return out;
}

double w2_between(const GridDensity& a, const GridDensity& b) {
  if (a.grid.dim == 1) return w2_1d(a, b);
  return std::sqrt(2.0 * solve_ot_lp(a, b).plan.cost);
}

ProjectionResult project_best(const GridDensity& g, const ConstraintField& f) {
  bool constant = true;
  for (double v : f.values)
    if (std::abs(v - f.values[0]) > 1e-12) constant = false;
  if (g.grid.dim == 1 && constant) return project_k1_1d(g, f.values[0]);
  try {
    return project_lp(g, f);
  } catch (const InstanceTooLarge&) {
    const double lx = g.grid.shape[0] * g.grid.spacing;
    const double ly = g.grid.dim == 2 ? g.grid.shape[1] * g.grid.spacing : 0.0;
    const double d2 = lx * lx + ly * ly;
    return project_entropic(g, f, 1e-4 * d2);
  }
}

}  // namespace

std::string reports_to_json(const std::vector<VerificationReport>& reports) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : reports) {
    nlohmann::json j;
    j["name"] = r.name;
    j["inputs_digest"] = r.inputs_digest;
    j["measured"] = r.measured;
    j["bound"] = r.bound;
    j["slack"] = r.slack;
    j["tolerance"] = r.tolerance;
    j["pass"] = r.pass;
    arr.push_back(std::move(j));
  }
  return arr.dump(2);
}

RadialH RadialH::quadratic() {
  RadialH H;
  H.name = "quadratic";
  H.grad = [](const std::array<double, 2>& z) { return z; };
  return H;
}

RadialH RadialH::smoothed_norm(double eps) {
  RadialH H;
  H.name = "smoothed_norm";
  H.grad = [eps](const std::array<double, 2>& z) {
    const double n = std::sqrt(eps * eps + z[0] * z[0] + z[1] * z[1]);
    return std::array<double, 2>{z[0] / n, z[1] / n};
  };
  return H;
}

VerificationReport main_inequality_residual(const GridDensity& rho,
                                            const GridDensity& g,
                                            const RadialH& H, double tol) {
  const DualPotentials duals = potentials_of(rho, g);
  const auto grho = gradient(rho.grid, rho.values);
  const auto gphi = gradient(rho.grid, duals.phi);
  const auto gg = gradient(g.grid, g.values);
  const auto gpsi = gradient(g.grid, duals.psi);

  double value = 0.0;
  for (std::size_t i = 0; i < grho.size(); ++i) {
    const auto Hz = H.grad(gphi[i]);
    value += (grho[i][0] * Hz[0] + grho[i][1] * Hz[1]) * rho.grid.cell_volume();
  }
  for (std::size_t j = 0; j < gg.size(); ++j) {
    const auto Hz = H.grad(gpsi[j]);
    value += (gg[j][0] * Hz[0] + gg[j][1] * Hz[1]) * g.grid.cell_volume();
  }

  VerificationReport rep;
  rep.name = "main_inequality_" + H.name;
  rep.inputs_digest = digest_of({&rho.values, &g.values});
  rep.measured["value"] = value;
  rep.bound = 0.0;
  rep.slack = value;
  rep.tolerance = tol;
  rep.pass = value >= -tol;
  return rep;
}

VerificationReport bv_projection_report(const GridDensity& g,
                                        const ConstraintField& f) {
  const ProjectionResult proj = project_best(g, f);
  const double tv_rho = total_variation(proj.rho);
  const double tv_g = total_variation(g);
  const double tv_f = total_variation(GridDensity(f.grid, f.values));
  bool constant = true;
  for (double v : f.values)
    if (std::abs(v - f.values[0]) > 1e-12) constant = false;

  VerificationReport rep;
  rep.name = constant ? "bv_constant_cap" : "bv_general_cap";
  rep.inputs_digest = digest_of({&g.values, &f.values});
  rep.bound = constant ? tv_g : tv_g + 2.0 * tv_f;
  rep.slack = rep.bound - tv_rho;
  rep.tolerance = (g.grid.dim == 1 ? 1e-3 : 0.1) * std::max(rep.bound, 1e-12);
  rep.pass = rep.slack >= -rep.tolerance;
  rep.measured["tv_projection"] = tv_rho;
  rep.measured["tv_g"] = tv_g;
  rep.measured["tv_f"] = tv_f;
  return rep;
}

VerificationReport saturation_report(const ProjectionResult& result,
                                     const GridDensity& g,
                                     const ConstraintField& f) {
  const GridDensity& rho = result.rho;
  double gmax = 0.0;
  for (double v : g.values) gmax = std::max(gmax, v);
  double fmax = 0.0;
  for (double v : f.values) fmax = std::max(fmax, v);

  std::size_t support = 0, mixed = 0;
  for (std::size_t i = 0; i < rho.values.size(); ++i) {
    if (rho.values[i] <= 0.0) continue;
    ++support;
    const double fi = f.values[i];
    const bool between =
        rho.values[i] > fi * 1e-3 && rho.values[i] < fi * (1.0 - 1e-3);
    const bool off_g = std::abs(rho.values[i] - g.values[i]) > 1e-3 * gmax;
    if (between && off_g) ++mixed;
  }
  const double band =
      support ? static_cast<double>(mixed) / static_cast<double>(support) : 0.0;

  // interior of the transported region: phi clearly below the threshold
  const double h = rho.grid.spacing;
  double lip = 0.0;
  for (const auto& gp : gradient(rho.grid, result.duals.phi))
    lip = std::max(lip, std::hypot(gp[0], gp[1]));
  std::size_t deep = 0;
  double deficit = 0.0;
  for (std::size_t i = 0; i < rho.values.size(); ++i) {
    if (f.values[i] <= 0.0) continue;
    if (result.duals.phi[i] < result.threshold - 3.0 * h * lip) {
      ++deep;
      deficit += std::max(0.0, f.values[i] - rho.values[i]);
    }
  }
  const double mean_deficit = deep ? deficit / static_cast<double>(deep) : 0.0;

  VerificationReport rep;
  rep.name = "saturation_structure";
  rep.inputs_digest = digest_of({&g.values, &f.values, &rho.values});
  rep.measured["mixed_band_fraction"] = band;
  rep.measured["mean_saturation_deficit"] = mean_deficit;
  rep.bound = 0.02;
  rep.slack = rep.bound - band;
  rep.tolerance = 0.0;
  rep.pass = band <= 0.02 && mean_deficit <= 1e-2 * std::max(fmax, 1e-12);
  return rep;
}

VerificationReport holder_modulus_check(const GridDensity& g0,
                                        const GridDensity& g1) {
  ConstraintField f = ConstraintField::constant(g0.grid, 1.0);
  const ProjectionResult p0 = project_best(g0, f);
  const ProjectionResult p1 = project_best(g1, f);
  const double w = w2_between(g0, g1);
  const double lhs = std::pow(w2_between(p0.rho, p1.rho), 2);
  const double d0 = std::sqrt(2.0 * p0.transport_cost);
  const double d1 = std::sqrt(2.0 * p1.transport_cost);
  const double rhs = w * w + w * (d0 + d1);

  VerificationReport rep;
  rep.name = "holder_modulus";
  rep.inputs_digest = digest_of({&g0.values, &g1.values});
  rep.measured["lhs"] = lhs;
  rep.measured["rhs"] = rhs;
  rep.measured["w2_inputs"] = w;
  rep.bound = rhs;
  rep.slack = rhs - lhs;
  rep.tolerance = 1e-4 * std::max(rhs, 1e-300);
  rep.pass = lhs <= rhs + rep.tolerance;
  return rep;
}

VerificationReport gamma_convergence_study(const GridDensity& g,
                                           const ConstraintField& f,
                                           const std::vector<int>& m_list) {
  if (m_list.empty() || !std::is_sorted(m_list.begin(), m_list.end()))
    throw ConfigError("gamma_convergence_study: m_list must be increasing");
  const ProjectionResult exact = project_best(g, f);

  VerificationReport rep;
  rep.name = "gamma_convergence";
  rep.inputs_digest = digest_of({&g.values, &f.values});
  std::vector<double> dist;
  for (int m : m_list) {
    const GridDensity rm = project_penalized(g, f, m, epsilon_schedule(m));
    dist.push_back(l1_distance(rm, exact.rho));
    rep.measured["l1_m" + std::to_string(m)] = dist.back();
  }

  // stability under mollification of the cap
  const int n = static_cast<int>(f.values.size());
  for (int w : {4, 2}) {
    std::vector<double> fm(f.values.size(), 0.0);
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      int cnt = 0;
      for (int k = -w; k <= w; ++k) {
        const int j = std::clamp(i + k, 0, n - 1);
        acc += f.values[static_cast<std::size_t>(j)];
        ++cnt;
      }
      fm[static_cast<std::size_t>(i)] = acc / cnt;
    }
    ConstraintField fmoll{f.grid, fm};
    const ProjectionResult pm = project_best(g, fmoll);
    rep.measured["l1_mollified_" + std::to_string(w)] =
        l1_distance(pm.rho, exact.rho);
  }

  rep.bound = 5e-2;
  rep.slack = rep.bound - dist.back();
  rep.tolerance = 0.0;
  rep.pass = dist.back() < dist.front() && dist.back() < 5e-2;
  return rep;
}

std::vector<VerificationReport> canonical_examples() {
  std::vector<VerificationReport> out;

  {  // ball growing by (1+eps)^{1/2} in radius
    const int n = 64;
    const double h = 2.0 / n;
    const Grid grid = Grid::box2d(n, n, -1.0 + 0.5 * h, -1.0 + 0.5 * h, h);
    const double R = 0.5, eps = 0.21;
    GridDensity g = GridDensity::zeros(grid);
    for (std::size_t i = 0; i < grid.cells(); ++i) {
      const auto c = grid.center(i);
      if (c[0] * c[0] + c[1] * c[1] <= R * R) g.values[i] = 1.0 + eps;
    }
    const ProjectionResult proj =
        project_lp(g, ConstraintField::constant(grid, 1.0));
    auto radius_of = [&](const std::vector<double>& v, double level) {
      std::size_t cnt = 0;
      for (double x : v)
        if (x > level) ++cnt;
      return std::sqrt(static_cast<double>(cnt) * h * h / 3.141592653589793);
    };
    const double r_in = radius_of(g.values, 0.5 * (1.0 + eps));
    const double r_out = radius_of(proj.rho.values, 0.5);
    const double ratio = r_out / r_in;

    VerificationReport rep;
    rep.name = "canonical_ball_growth";
    rep.inputs_digest = digest_of({&g.values});
    rep.measured["radius_ratio"] = ratio;
    rep.bound = std::sqrt(1.0 + eps);
    rep.slack = -std::abs(ratio - rep.bound);
    rep.tolerance = 2.0 * h / R;
    rep.pass = std::abs(ratio - rep.bound) <= rep.tolerance;
    out.push_back(std::move(rep));
  }

  {  // an overfull bump saturates an interval holding a cell with g >= 1
    const int n = 256;
    const double h = 2.0 / n;
    const Grid grid = Grid::line(n, -1.0 + 0.5 * h, h);
    GridDensity g = GridDensity::zeros(grid);
    for (int i = 0; i < n; ++i) {
      const double x = grid.x_of(i);
      g.values[static_cast<std::size_t>(i)] = 2.0 * std::exp(-x * x / 0.02);
    }
    const ProjectionResult proj = project_k1_1d(g, 1.0);
    double gmax_sat = 0.0;
    for (std::size_t i = 0; i < g.values.size(); ++i)
      if (proj.saturated[i]) gmax_sat = std::max(gmax_sat, g.values[i]);

    VerificationReport rep;
    rep.name = "canonical_one_interval";
    rep.inputs_digest = digest_of({&g.values});
    rep.measured["max_g_on_saturated"] = gmax_sat;
    rep.bound = 1.0;
    rep.slack = gmax_sat - 1.0;
    rep.tolerance = 0.0;
    rep.pass = gmax_sat >= 1.0;
    out.push_back(std::move(rep));
  }

  {  // sharpness of the general-cap bound at n = 25
    const int fam = 25;
    const double h = 0.25;
    const int cells = static_cast<int>((2.0 - (-26.0)) / h);
    const Grid grid = Grid::line(cells, -26.0 + 0.5 * h, h);
    GridDensity g = GridDensity::zeros(grid);
    ConstraintField f = ConstraintField::constant(grid, 0.0);
    for (int i = 0; i < cells; ++i) {
      const double x = grid.x_of(i);
      if (x > -fam && x < 0.0) g.values[static_cast<std::size_t>(i)] = 1.0 / fam;
      if (x > 0.0) f.values[static_cast<std::size_t>(i)] = 1.0;
    }
    const ProjectionResult proj = project_lp(g, f);
    const double tv_rho = total_variation(proj.rho);
    const double tv_g = total_variation(g);
    const double tv_f = total_variation(GridDensity(grid, f.values));
    const double ratio = (tv_rho - tv_g) / tv_f;
    const double expect = 2.0 - 2.0 / fam;

    VerificationReport rep;
    rep.name = "canonical_sharpness";
    rep.inputs_digest = digest_of({&g.values, &f.values});
    rep.measured["ratio"] = ratio;
    rep.measured["tv_projection"] = tv_rho;
    rep.measured["tv_g"] = tv_g;
    rep.measured["tv_f"] = tv_f;
    rep.bound = expect;
    rep.slack = -std::abs(ratio - expect);
    rep.tolerance = 1e-6;
    rep.pass = std::abs(ratio - expect) <= 1e-6;
    out.push_back(std::move(rep));
  }

  return out;
}

}  // namespace otbv
