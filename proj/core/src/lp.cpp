#include "otbv/lp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "otbv/ot1d.hpp"

namespace otbv {

std::vector<double> TransportPlan::row_sums(std::size_t n_source) const {
  std::vector<double> r(n_source, 0.0);
  for (const auto& e : entries) r[static_cast<std::size_t>(e.source)] += e.weight;
  return r;
}

std::vector<double> TransportPlan::col_sums(std::size_t n_target) const {
  std::vector<double> c(n_target, 0.0);
  for (const auto& e : entries) c[static_cast<std::size_t>(e.target)] += e.weight;
  return c;
}

namespace {

// Bipartite network simplex with implicit dense arcs. Nodes are
// 0..ns-1 (sources) then ns..ns+nt-1 (targets, dummy last when present).
class NetworkSimplex {
 public:
  NetworkSimplex(const TransportInstance& inst, const LpOptions& opt)
      : inst_(inst), opt_(opt) {
    ns_ = static_cast<int>(inst.supply.size());
    nt_ = static_cast<int>(inst.demand.size()) + (inst.has_dummy_target ? 1 : 0);
    n_ = ns_ + nt_;
    supply_ = inst.supply;
    demand_ = inst.demand;
    if (inst.has_dummy_target) demand_.push_back(inst.dummy_demand);

    // tiny deterministic perturbation keeps the basis nondegenerate
    double total = std::accumulate(supply_.begin(), supply_.end(), 0.0);
    const double delta = total * 1e-14 / std::max(1, ns_);
    double added = 0.0;
    for (int i = 0; i < ns_; ++i) {
      const double d = delta * (i + 1) / ns_;
      supply_[i] += d;
      added += d;
    }
    demand_.back() += added;

    cost_scale_ = 1.0;
    for (int i = 0; i < ns_; ++i) cost_scale_ = std::max(cost_scale_, std::abs(cost(i, 0)));
  }

  void solve() {
    build_initial_basis();
    const double tol = opt_.rc_tolerance * cost_scale_;
    const std::uint64_t pairs = static_cast<std::uint64_t>(ns_) * nt_;
    const std::uint64_t block = std::min<std::uint64_t>(pairs, 1 << 16);
    const long max_pivots = 400L * n_ + 20000;

    std::uint64_t cursor = 0;
    std::uint64_t scanned_since_pivot = 0;
    while (true) {
      // block pricing: best candidate in the next block
      double best_rc = -tol;
      int best_i = -1, best_j = -1;
      for (std::uint64_t k = 0; k < block; ++k) {
        const std::uint64_t p = (cursor + k) % pairs;
        const int i = static_cast<int>(p / nt_);
        const int j = static_cast<int>(p % nt_);
        const double rc = cost(i, j) - pot_[i] - pot_[ns_ + j];
        if (rc < best_rc) {
          best_rc = rc;
          best_i = i;
          best_j = j;
        }
      }
      cursor = (cursor + block) % pairs;
      if (best_i < 0) {
        scanned_since_pivot += block;
        if (scanned_since_pivot >= pairs) break;  // full sweep, optimal
        continue;
      }
      scanned_since_pivot = 0;
      pivot(best_i, ns_ + best_j);
      if (++pivots_ > max_pivots)
        throw SolverFailure("network simplex: pivot limit exceeded");
    }
  }

  TransportResult extract() const {
    TransportResult res;
    res.pivots = static_cast<int>(pivots_);
    double primal = 0.0;
    for (int node = 0; node < n_; ++node) {
      if (parent_[node] < 0) continue;
      const double f = flow_up_[node];
      if (f <= 0) continue;
      const int a = node, b = parent_[node];
      const int src = a < ns_ ? a : b;
      const int tgt = a < ns_ ? b - ns_ : a - ns_;
      const bool dummy = inst_.has_dummy_target && tgt == nt_ - 1;
      primal += f * cost(src, tgt);
      if (!dummy) res.flows.push_back({src, tgt, f});
    }
    res.cost = primal;
    res.u.assign(pot_.begin(), pot_.begin() + ns_);
    res.v.assign(pot_.begin() + ns_,
                 pot_.begin() + ns_ + (inst_.has_dummy_target ? nt_ - 1 : nt_));
    res.v_dummy = inst_.has_dummy_target ? pot_[n_ - 1] : 0.0;
    double dual = 0.0;
    for (int i = 0; i < ns_; ++i) dual += pot_[i] * supply_[i];
    for (int j = 0; j < nt_; ++j) dual += pot_[ns_ + j] * demand_[j];
    res.duality_gap = std::abs(primal - dual) /
                      std::max({1e-300, std::abs(primal), std::abs(dual)});
    return res;
  }

 private:
  double cost(int i, int j) const {
    if (inst_.has_dummy_target && j == nt_ - 1) return 0.0;
    const auto& a = inst_.source_pos[static_cast<std::size_t>(i)];
    const auto& b = inst_.target_pos[static_cast<std::size_t>(j)];
    const double dx = a[0] - b[0], dy = a[1] - b[1];
    return 0.5 * (dx * dx + dy * dy);
  }

  void build_initial_basis() {
    parent_.assign(n_, -1);
    flow_up_.assign(n_, 0.0);
    depth_.assign(n_, 0);
    children_.assign(n_, {});
    pot_.assign(n_, 0.0);

    // northwest-corner: a staircase spanning tree
    std::vector<double> a = supply_, b = demand_;
    int i = 0, j = 0;
    bool attach_target = true;  // first arc attaches target 0 under source 0
    while (i < ns_ && j < nt_) {
      const int snode = i, tnode = ns_ + j;
      const double f = std::min(a[i], b[j]);
      if (attach_target) {
        parent_[tnode] = snode;
        flow_up_[tnode] = f;
        children_[snode].push_back(tnode);
      } else {
        parent_[snode] = tnode;
        flow_up_[snode] = f;
        children_[tnode].push_back(snode);
      }
      a[i] -= f;
      b[j] -= f;
      if (a[i] <= b[j]) {
        ++i;
        attach_target = false;
      } else {
        ++j;
        attach_target = true;
      }
    }
    // depths and potentials from the root (source 0)
    refresh_subtree(0, -1);
  }

  // recompute depth and potential below `node` whose parent data is current
  void refresh_subtree(int node, int parent_of_node) {
    std::vector<std::pair<int, int>> stack{{node, parent_of_node}};
    while (!stack.empty()) {
      const auto [u, p] = stack.back();
      stack.pop_back();
      if (p < 0) {
        depth_[u] = 0;
        pot_[u] = 0.0;
      } else {
        depth_[u] = depth_[p] + 1;
        const int src = u < ns_ ? u : p;
        const int tgt = u < ns_ ? p - ns_ : u - ns_;
        pot_[u] = cost(src, tgt) - pot_[p];
      }
      for (int c : children_[u]) stack.push_back({c, u});
    }
  }

  void pivot(int enter_src, int enter_tgt) {
    // walk both endpoints to the LCA, collecting the tree path
    std::vector<int> path_i, path_j;  // nodes whose parent-arc is on the cycle
    int a = enter_src, b = enter_tgt;
    while (depth_[a] > depth_[b]) {
      path_i.push_back(a);
      a = parent_[a];
    }
    while (depth_[b] > depth_[a]) {
      path_j.push_back(b);
      b = parent_[b];
    }
    while (a != b) {
      path_i.push_back(a);
      path_j.push_back(b);
      a = parent_[a];
      b = parent_[b];
    }

    // sign of the flow change on each path arc: on the i-side a source
    // child decreases, on the j-side a target child decreases
    auto sign_i = [&](int node) { return node < ns_ ? -1.0 : +1.0; };
    auto sign_j = [&](int node) { return node < ns_ ? +1.0 : -1.0; };

    double theta = std::numeric_limits<double>::infinity();
    int leave = -1;
    bool leave_on_j = false;
    for (int node : path_j)
      if (sign_j(node) < 0 && flow_up_[node] < theta) {
        theta = flow_up_[node];
        leave = node;
        leave_on_j = true;
      }
    for (int node : path_i)
      if (sign_i(node) < 0 && flow_up_[node] < theta) {
        theta = flow_up_[node];
        leave = node;
        leave_on_j = false;
      }
    if (leave < 0) throw SolverFailure("network simplex: no leaving arc");

    for (int node : path_i) flow_up_[node] += sign_i(node) * theta;
    for (int node : path_j) flow_up_[node] += sign_j(node) * theta;

    // re-root the detached subtree at the entering endpoint on its side,
    // reversing parent pointers along the chain w -> ... -> leave
    const int w = leave_on_j ? enter_tgt : enter_src;
    const int anchor = leave_on_j ? enter_src : enter_tgt;

    std::vector<int> chain{w};
    while (chain.back() != leave) chain.push_back(parent_[chain.back()]);
    std::vector<double> old_flow(chain.size());
    for (std::size_t s = 0; s < chain.size(); ++s) old_flow[s] = flow_up_[chain[s]];
    for (std::size_t s = 0; s + 1 < chain.size(); ++s)
      detach_child(chain[s + 1], chain[s]);
    detach_child(parent_[leave], leave);

    parent_[w] = anchor;
    flow_up_[w] = theta;
    children_[anchor].push_back(w);
    for (std::size_t s = 0; s + 1 < chain.size(); ++s) {
      parent_[chain[s + 1]] = chain[s];
      flow_up_[chain[s + 1]] = old_flow[s];
      children_[chain[s]].push_back(chain[s + 1]);
    }

    refresh_subtree(w, anchor);
  }

  void detach_child(int parent, int child) {
    if (parent < 0 || child < 0) return;
    auto& v = children_[parent];
    const auto it = std::find(v.begin(), v.end(), child);
    if (it != v.end()) v.erase(it);
  }

  const TransportInstance& inst_;
  const LpOptions& opt_;
  int ns_ = 0, nt_ = 0, n_ = 0;
  std::vector<double> supply_, demand_;
  std::vector<int> parent_, depth_;
  std::vector<double> flow_up_, pot_;
  std::vector<std::vector<int>> children_;
  double cost_scale_ = 1.0;
  long pivots_ = 0;
};

}  // namespace

TransportResult solve_transport(const TransportInstance& inst,
                                const LpOptions& options) {
  const std::uint64_t pairs =
      static_cast<std::uint64_t>(inst.supply.size()) *
      (inst.demand.size() + (inst.has_dummy_target ? 1 : 0));
  if (pairs > options.max_pairs)
    throw InstanceTooLarge("transport instance has " + std::to_string(pairs) +
                           " pairs, cap is " + std::to_string(options.max_pairs));
  if (inst.supply.empty() || (inst.demand.empty() && !inst.has_dummy_target))
    throw SolverFailure("transport instance is empty");
  double sa = std::accumulate(inst.supply.begin(), inst.supply.end(), 0.0);
  double sd = std::accumulate(inst.demand.begin(), inst.demand.end(), 0.0) +
              (inst.has_dummy_target ? inst.dummy_demand : 0.0);
  if (std::abs(sa - sd) > 1e-9 * std::max(sa, sd))
    throw MassMismatch("transport instance is unbalanced");

  NetworkSimplex nx(inst, options);
  nx.solve();
  return nx.extract();
}

LpSolution solve_ot_lp(const GridDensity& rho, const GridDensity& g,
                       const LpOptions& options) {
  require_equal_mass(rho, g);
  TransportInstance inst;
  std::vector<int> src_cells, tgt_cells;
  const double vol_r = rho.grid.cell_volume(), vol_g = g.grid.cell_volume();
  for (std::size_t i = 0; i < rho.values.size(); ++i)
    if (rho.values[i] > 0.0) {
      src_cells.push_back(static_cast<int>(i));
      inst.source_pos.push_back(rho.grid.center(i));
      inst.supply.push_back(rho.values[i] * vol_r);
    }
  for (std::size_t j = 0; j < g.values.size(); ++j)
    if (g.values[j] > 0.0) {
      tgt_cells.push_back(static_cast<int>(j));
      inst.target_pos.push_back(g.grid.center(j));
      inst.demand.push_back(g.values[j] * vol_g);
    }
  // balance exactly
  const double sa = std::accumulate(inst.supply.begin(), inst.supply.end(), 0.0);
  const double sd = std::accumulate(inst.demand.begin(), inst.demand.end(), 0.0);
  for (double& d : inst.demand) d *= sa / sd;

  const auto res = solve_transport(inst, options);

  LpSolution sol;
  sol.plan.source_grid = rho.grid;
  sol.plan.target_grid = g.grid;
  for (const auto& e : res.flows)
    sol.plan.entries.push_back({src_cells[static_cast<std::size_t>(e.source)],
                                tgt_cells[static_cast<std::size_t>(e.target)],
                                e.weight});
  sol.plan.cost = res.cost;
  sol.duality_gap = res.duality_gap;
  sol.pivots = res.pivots;

  // duals on the full grids: anchor gauge, then c-transform extension
  const double kappa = res.u.empty() ? 0.0 : res.u[0];
  std::vector<double> phi_s(res.u), psi_s(res.v);
  for (double& u : phi_s) u -= kappa;
  for (double& v : psi_s) v += kappa;

  DualPotentials duals;
  duals.source_grid = rho.grid;
  duals.target_grid = g.grid;
  duals.slack = std::max(1e-12, sol.duality_gap);
  duals.phi.assign(rho.grid.cells(), 0.0);
  duals.psi.assign(g.grid.cells(), 0.0);
  for (std::size_t k = 0; k < src_cells.size(); ++k)
    duals.phi[static_cast<std::size_t>(src_cells[k])] = phi_s[k];
  for (std::size_t k = 0; k < tgt_cells.size(); ++k)
    duals.psi[static_cast<std::size_t>(tgt_cells[k])] = psi_s[k];
  // extend to non-support cells
  for (std::size_t i = 0; i < rho.values.size(); ++i) {
    if (rho.values[i] > 0.0) continue;
    const auto x = rho.grid.center(i);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < tgt_cells.size(); ++k) {
      const auto y = g.grid.center(static_cast<std::size_t>(tgt_cells[k]));
      const double dx = x[0] - y[0], dy = x[1] - y[1];
      best = std::min(best, 0.5 * (dx * dx + dy * dy) - psi_s[k]);
    }
    duals.phi[i] = best;
  }
  for (std::size_t j = 0; j < g.values.size(); ++j) {
    if (g.values[j] > 0.0) continue;
    const auto y = g.grid.center(j);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < src_cells.size(); ++k) {
      const auto x = rho.grid.center(static_cast<std::size_t>(src_cells[k]));
      const double dx = x[0] - y[0], dy = x[1] - y[1];
      best = std::min(best, 0.5 * (dx * dx + dy * dy) - phi_s[k]);
    }
    duals.psi[j] = best;
  }
  sol.duals = std::move(duals);
  return sol;
}

}  // namespace otbv
