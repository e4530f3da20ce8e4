#pragma once

#include <array>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "otbv/grid.hpp"
#include "otbv/projection.hpp"

namespace otbv {

struct VerificationReport {
  std::string name;
  std::string inputs_digest;
  std::map<std::string, double> measured;
  double bound = 0.0;
  double slack = 0.0;  // bound minus measured quantity; pass iff >= -tolerance
  double tolerance = 0.0;
  bool pass = false;
};

std::string reports_to_json(const std::vector<VerificationReport>& reports);

// Radial convex function H acting on gradient vectors.
struct RadialH {
  std::string name;
  std::function<std::array<double, 2>(const std::array<double, 2>&)> grad;

  static RadialH quadratic();             // H(z) = |z|^2/2, grad = z
  static RadialH smoothed_norm(double eps);  // H(z) = sqrt(eps^2+|z|^2)
};

// int grad(rho) . gradH(grad(phi)) + int grad(g) . gradH(grad(psi)),
// centered differences and midpoint quadrature; potentials exact in 1D,
// LP duals in 2D. Nonnegative up to discretization for convex H.
VerificationReport main_inequality_residual(const GridDensity& rho,
                                            const GridDensity& g,
                                            const RadialH& H,
                                            double tol = 1e-4);

// TV(projection) against TV(g) for constant caps, TV(g) + 2 TV(f) otherwise.
VerificationReport bv_projection_report(const GridDensity& g,
                                        const ConstraintField& f);

// Mixed-band fraction of the saturation structure plus the interior
// saturation deficit below the threshold level.
VerificationReport saturation_report(const ProjectionResult& result,
                                     const GridDensity& g,
                                     const ConstraintField& f);

// W2^2(P g0, P g1) <= W2^2(g0,g1) + W2(g0,g1) (dist(g0,K1) + dist(g1,K1)).
VerificationReport holder_modulus_check(const GridDensity& g0,
                                        const GridDensity& g1);

// Penalized minimizers against the exact projection along m_list, plus a
// mollification ladder on f.
VerificationReport gamma_convergence_study(const GridDensity& g,
                                           const ConstraintField& f,
                                           const std::vector<int>& m_list);

// The three canned scenarios: ball radius growth, one-interval saturation,
// and the sharpness family.
std::vector<VerificationReport> canonical_examples();

}  // namespace otbv
