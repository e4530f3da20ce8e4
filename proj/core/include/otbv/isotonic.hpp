#pragma once

#include <vector>

namespace otbv {

// Piecewise linear function on [p.front(), p.back()]. Segment s runs from
// (p[s], y[s]) to (p[s+1], y[s+1]); repeated p values encode jumps.
struct PiecewiseLinear {
  std::vector<double> p;
  std::vector<double> y;

  double operator()(double q) const;  // right-continuous at jumps
  double integral() const;
};

// L2 projection onto the cone of nondecreasing functions, pool-adjacent-
// violators on segments. Pooled stretches become constants whose boundaries
// inside a segment are located exactly, so the output knots are a subset of
// the input knots plus split points.
PiecewiseLinear isotonic_project(const PiecewiseLinear& in);

// Same with the output additionally clamped to [lo, hi]; for a nondecreasing
// result this equals the projection with endpoint bounds v(start) >= lo,
// v(end) <= hi.
PiecewiseLinear isotonic_project_clamped(const PiecewiseLinear& in, double lo,
                                         double hi);

}  // namespace otbv
