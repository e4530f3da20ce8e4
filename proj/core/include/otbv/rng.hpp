#pragma once

#include <cstdint>

#include "otbv/grid.hpp"

namespace otbv {

// Counter-based generator: value i of stream (seed, stream) is a pure
// function of (seed, stream, i), so parallel sweeps are order-independent.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : seed_(seed), stream_(stream) {}

  std::uint64_t next_u64();
  double next_double();                    // uniform in [0, 1)
  double uniform(double lo, double hi);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
};

// Smooth random density: a mixture of Gaussian bumps on the interior of the
// grid, normalized to total mass `total_mass`. Used by the seeded suites.
GridDensity random_smooth_density(const Grid& grid, std::uint64_t seed,
                                  std::uint64_t stream, int bumps = 3,
                                  double total_mass = 1.0);

}  // namespace otbv
