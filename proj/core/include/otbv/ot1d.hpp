#pragma once

#include <vector>

#include "otbv/dual.hpp"
#include "otbv/grid.hpp"
#include "otbv/quantile.hpp"

namespace otbv {

// Exact 1D optimal transport by quantile calculus. Equal masses required
// (tolerance 1e-9); masses different from 1 are allowed.

double w2_1d(const GridDensity& rho, const GridDensity& g);

// T = F_g^{-1} o F_rho at cell centers where rho > 0; identity elsewhere.
std::vector<double> monotone_map_1d(const GridDensity& rho, const GridDensity& g);

// phi from cumulative trapezoidal integration of x - T(x) anchored at the
// leftmost support cell; psi by the symmetric construction, gauge-matched so
// phi(x) + psi(T(x)) = |x-T(x)|^2/2 at the anchor; both extended outside the
// supports by c-transforms.
DualPotentials potentials_1d(const GridDensity& rho, const GridDensity& g);

void require_equal_mass(const GridDensity& a, const GridDensity& b);

}  // namespace otbv
