#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "otbv/grid.hpp"
#include "otbv/projection.hpp"

namespace otbv {

enum class SchemeKind { set_growth, crowd, porous_medium };

struct SchemeConfig {
  SchemeKind kind = SchemeKind::set_growth;
  double tau = 0.1;
  double t_final = 0.3;
  // per-cell velocities for the crowd scheme; empty means zero
  std::vector<std::array<double, 2>> velocity;
  double sigma = 0.0;  // diffusion coefficient
  ConvexIntegrand integrand = ConvexIntegrand::zero();
  JkoMethod jko_method = JkoMethod::entropic;
  JkoOptions jko_options{};
  int snapshot_stride = 1;

  int steps() const;  // floor(t_final / tau), must be >= 1
};

struct SchemeStep {
  int step = 0;
  double time = 0.0;
  double mass_value = 0.0;
  double tv = 0.0;
  double tv_pre = 0.0;   // before the projection of this step (= tv at step 0)
  double w2_step = 0.0;  // W2 moved this step (1D exact, 2D via LP)
  double min_density = 0.0;
  double max_density = 0.0;
  double violation = 0.0;  // max(0, rho - cap) for capped schemes
};

struct SchemeTrace {
  std::vector<SchemeStep> rows;  // rows[0] describes the initial state
  std::vector<std::pair<int, GridDensity>> snapshots;
  bool truncated = false;  // set growth ran out of box capacity
};

// rho_{k+1} = P_{K_1}[(1+tau) rho_k]; iterates stay indicators of growing
// sets. Truncates with a flag once the box cannot hold the mass.
SchemeTrace evolve_set_growth(const GridDensity& rho0, const SchemeConfig& cfg);

// Per step: push forward along id + tau v, optionally one implicit heat
// step with coefficient sigma (five-point stencil, conjugate gradient to
// 1e-10), then project onto K_1.
SchemeTrace evolve_crowd(const GridDensity& rho0, const SchemeConfig& cfg);

// Minimizing-movement iteration of int h(rho).
SchemeTrace evolve_porous_medium(const GridDensity& rho0,
                                 const SchemeConfig& cfg);

// One row per step: step,time,mass,tv,tv_pre,w2_step,min,max,violation.
std::string trace_csv(const SchemeTrace& trace);

}  // namespace otbv
