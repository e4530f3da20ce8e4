#pragma once

#include <stdexcept>
#include <string>

namespace otbv {

struct MassMismatch : std::runtime_error {
  explicit MassMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct Infeasible : std::runtime_error {
  explicit Infeasible(const std::string& what) : std::runtime_error(what) {}
};

struct InstanceTooLarge : std::runtime_error {
  explicit InstanceTooLarge(const std::string& what) : std::runtime_error(what) {}
};

struct SolverFailure : std::runtime_error {
  explicit SolverFailure(const std::string& what) : std::runtime_error(what) {}
};

// Carries the marginal error observed when the iteration budget ran out.
struct NotConverged : std::runtime_error {
  NotConverged(const std::string& what, int iterations, double last_error)
      : std::runtime_error(what), iterations(iterations), last_error(last_error) {}
  int iterations;
  double last_error;
};

struct TargetOutsideDomain : std::runtime_error {
  explicit TargetOutsideDomain(const std::string& what) : std::runtime_error(what) {}
};

struct NonFiniteBisection : std::runtime_error {
  explicit NonFiniteBisection(const std::string& what) : std::runtime_error(what) {}
};

struct InvalidDensityFile : std::runtime_error {
  explicit InvalidDensityFile(const std::string& what) : std::runtime_error(what) {}
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace otbv
