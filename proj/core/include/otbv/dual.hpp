#pragma once

#include <vector>

#include "otbv/grid.hpp"

namespace otbv {

// Kantorovich pair for the cost c(x,y) = |x-y|^2 / 2, gauged so that phi
// vanishes at the anchor cell (leftmost / first support cell of the source).
struct DualPotentials {
  Grid source_grid;
  Grid target_grid;
  std::vector<double> phi;  // per source cell
  std::vector<double> psi;  // per target cell
  double slack = 0.0;       // duality slack bound reported by the producer
};

// chi^c(s) = min over cells t of `grid` of  |s-t|^2/2 - chi(t), evaluated at
// every cell center s of `out_grid`. Exact minimization, O(n*m).
std::vector<double> c_transform(const std::vector<double>& chi, const Grid& grid,
                                const Grid& out_grid);

// sum(phi * rho) * vol + sum(psi * g) * vol
double duality_value(const DualPotentials& duals, const GridDensity& rho,
                     const GridDensity& g);

}  // namespace otbv
