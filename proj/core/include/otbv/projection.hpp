#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "otbv/dual.hpp"
#include "otbv/grid.hpp"
#include "otbv/lp.hpp"

namespace otbv {

// Convex lower semicontinuous integrand on the density axis; +infinity
// past `upper`. hp must be nondecreasing and match h.
struct ConvexIntegrand {
  std::function<double(double)> h;
  std::function<double(double)> hp;
  double upper = std::numeric_limits<double>::infinity();
  double hp0 = 0.0;       // right derivative at 0
  bool trivial = false;   // identically zero

  static ConvexIntegrand zero();
  static ConvexIntegrand indicator(double cap);   // 0 on [0, cap]
  static ConvexIntegrand quadratic();             // t^2/2
  static ConvexIntegrand entropy();               // t log t
  static ConvexIntegrand power(double exponent);  // t^p/(p-1), p > 1
  // t^{m+1}/(m+1) + eps_m t^2/2, the capped-growth surrogate
  static ConvexIntegrand penalty(int m, double eps_m);
};

struct ProjectionResult {
  GridDensity rho;
  DualPotentials duals;
  double threshold = 0.0;        // level of phi separating full from empty
  std::vector<char> saturated;   // cells with rho >= f (1 - 1e-3)
  double duality_gap = 0.0;
  double constraint_violation = 0.0;  // max(0, rho - f)
  double transport_cost = 0.0;        // <c, gamma>, so W2 = sqrt(2 cost)
  int iterations = 0;
};

// eps_m = 2^{-m^2}, floored at 1e-300.
double epsilon_schedule(int m);

// Closest density below f in the quadratic Wasserstein metric, exact
// transportation LP on cell-center point masses. Sources are windowed
// around the support of g; the window widens until the solution clears
// its frontier.
ProjectionResult project_lp(const GridDensity& g, const ConstraintField& f,
                            const LpOptions& options = {});

// 1D, constant cap: exact continuum algorithm through isotonic regression
// of the quantile function, box-clamped; saturated intervals come out with
// machine-precision endpoints before rasterization.
ProjectionResult project_k1_1d(const GridDensity& g, double cap);

// Entropic relaxation: alternating KL projections onto the two marginal
// sets (equality on g, inequality under f) with the memory term on the
// inequality step, log domain, epsilon scaling.
ProjectionResult project_entropic(const GridDensity& g,
                                  const ConstraintField& f, double eps,
                                  int max_iter = 20000, double tol = 1e-7);

struct PenalizedOptions {
  double eps = 0.0;  // 0: 1e-4 * diam^2
  int max_iter = 60000;
  double tol = 1e-6;
};

// Minimizer of 1/2 W2^2(g, .) + 1/(m+1) int (rho/f)^{m+1} + eps_m/2 int
// (rho/f)^2 by entropic scaling; the pointwise step is solved by bisection
// to 1e-12.
GridDensity project_penalized(const GridDensity& g, const ConstraintField& f,
                              int m, double eps_m,
                              const PenalizedOptions& options = {});

enum class JkoMethod { lp, entropic };

struct JkoOptions {
  double eps = 0.0;  // entropic method; 0: 1e-4 * diam^2
  int max_iter = 20000;
  double tol = 1e-9;
};

// One minimizing-movement step: argmin 1/(2 tau) W2^2(., rho_prev) +
// int h(rho). The lp method (1D only) iterates exact transport potentials
// with a golden-section search over the threshold constant.
GridDensity jko_step(const GridDensity& rho_prev, const ConvexIntegrand& h,
                     double tau, JkoMethod method,
                     const JkoOptions& options = {});

// L1(rho) norm of h'(rho) - max{C - phi, h'(0)} with phi the potential of
// the transport from rho to g and C fitted by least squares on {rho > delta}.
double optimality_residual(const GridDensity& rho, const GridDensity& g,
                           const ConvexIntegrand& h);

// Same for the penalized first-order condition
// phi + (rho/f)^m / f + eps_m (rho/f) / f = C.
double penalized_optimality_residual(const GridDensity& rho_m,
                                     const GridDensity& g,
                                     const ConstraintField& f, int m,
                                     double eps_m);

}  // namespace otbv
