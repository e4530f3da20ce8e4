#pragma once

#include <vector>

#include "otbv/grid.hpp"

namespace otbv {

// Piecewise-linear quantile function of a piecewise-constant 1D density.
// Knots are cumulative masses at cell edges: p nondecreasing, positions
// nondecreasing, p.front() = 0 and p.back() = total mass. A zero-density gap
// shows up as two knots with equal p and different x (a jump of F^{-1}).
struct QuantileTable {
  std::vector<double> p;
  std::vector<double> x;
  double total_mass = 0.0;

  double operator()(double prob) const;  // right-continuous evaluation
};

QuantileTable quantile_table(const GridDensity& rho);

// CDF of the piecewise-constant interpolant, exact.
double cdf(const GridDensity& rho, double x);

// Exact integral of (Qa - Qb)^2 over [0, M]; masses must agree to mass_tol.
double quantile_l2sq(const QuantileTable& a, const QuantileTable& b);

}  // namespace otbv
