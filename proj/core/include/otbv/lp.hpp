#pragma once

#include <cstdint>
#include <vector>

#include "otbv/dual.hpp"
#include "otbv/grid.hpp"

namespace otbv {

// Discrete coupling between two grids, sparse triplets (source cell index,
// target cell index, mass). cost is sum(gamma * |x-y|^2 / 2).
struct TransportPlan {
  Grid source_grid;
  Grid target_grid;
  struct Entry {
    int source;
    int target;
    double weight;
  };
  std::vector<Entry> entries;
  double cost = 0.0;

  std::vector<double> row_sums(std::size_t n_source) const;
  std::vector<double> col_sums(std::size_t n_target) const;
};

struct LpOptions {
  // cap on source x target pair count after support sparsification
  std::uint64_t max_pairs = std::uint64_t(4096) * 4096;
  double rc_tolerance = 1e-11;  // relative to the cost scale
};

struct LpSolution {
  TransportPlan plan;
  DualPotentials duals;
  double duality_gap = 0.0;  // relative
  int pivots = 0;
};

// Exact OT between equal-mass densities by network simplex on the bipartite
// support graph; point masses at cell centers, cost |x-y|^2/2.
LpSolution solve_ot_lp(const GridDensity& rho, const GridDensity& g,
                       const LpOptions& options = {});

// Balanced transportation problem solver used by solve_ot_lp and the
// projection module. Node positions are arbitrary points.
struct TransportInstance {
  std::vector<std::array<double, 2>> source_pos;
  std::vector<std::array<double, 2>> target_pos;
  std::vector<double> supply;  // > 0, sum equals sum(demand)
  std::vector<double> demand;  // > 0
  // optional zero-cost overflow target: index == target_pos.size()
  bool has_dummy_target = false;
  double dummy_demand = 0.0;
};

struct TransportResult {
  std::vector<TransportPlan::Entry> flows;  // dummy arcs excluded
  std::vector<double> u;                    // source potentials
  std::vector<double> v;                    // target potentials (no dummy)
  double v_dummy = 0.0;
  double cost = 0.0;
  double duality_gap = 0.0;
  int pivots = 0;
};

TransportResult solve_transport(const TransportInstance& inst,
                                const LpOptions& options = {});

}  // namespace otbv
