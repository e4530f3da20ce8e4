#pragma once

#include <array>
#include <vector>

#include "otbv/dual.hpp"
#include "otbv/grid.hpp"
#include "otbv/lp.hpp"

namespace otbv {

// Log-domain Gibbs kernel on two point clouds, cost |x-y|^2/2. The softmin
// helpers are the building block of every scaling loop here: row_softmin
// returns, per source point, -eps * log sum_j exp((v_j - c_ij)/eps).
struct EntropicKernel {
  std::vector<std::array<double, 2>> xs, ys;
  double eps = 1.0;

  std::vector<double> row_softmin(const std::vector<double>& v) const;
  std::vector<double> col_softmin(const std::vector<double>& u) const;
  double cost(std::size_t i, std::size_t j) const;
};

struct SinkhornResult {
  TransportPlan plan;
  DualPotentials duals;
  double marginal_error = 0.0;  // L1, relative to total mass
  int iterations = 0;
};

// Entropic OT with an epsilon-scaling schedule (geometric from 10x the
// target down). Stops when the free marginal's L1 error drops below tol;
// throws NotConverged otherwise. Reported cost is <c, gamma>, without the
// entropy term.
SinkhornResult sinkhorn(const GridDensity& rho, const GridDensity& g,
                        double epsilon, int max_iter = 50000,
                        double tol = 1e-9);

}  // namespace otbv
