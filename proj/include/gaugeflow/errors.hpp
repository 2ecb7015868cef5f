#pragma once

#include <stdexcept>
#include <string>

namespace gaugeflow {

// Principal logarithm undefined: an eigenvalue sits within the cut-locus
// margin of -1. Signals a too-coarse lattice for the configuration.
struct LogBranchError : std::runtime_error {
  explicit LogBranchError(const std::string& what) : std::runtime_error(what) {}
};

// Iterative solver or Newton/continuation loop exceeded its budget.
struct NoConvergenceError : std::runtime_error {
  double last_residual = 0.0;
  explicit NoConvergenceError(const std::string& what, double res = 0.0)
      : std::runtime_error(what), last_residual(res) {}
};

struct InsufficientDataError : std::runtime_error {
  explicit InsufficientDataError(const std::string& what) : std::runtime_error(what) {}
};

struct DimensionMismatchError : std::runtime_error {
  explicit DimensionMismatchError(const std::string& what) : std::runtime_error(what) {}
};

struct UnsupportedExponentError : std::runtime_error {
  explicit UnsupportedExponentError(const std::string& what) : std::runtime_error(what) {}
};

struct NotCriticalError : std::runtime_error {
  explicit NotCriticalError(const std::string& what) : std::runtime_error(what) {}
};

struct StepUnderflowError : std::runtime_error {
  explicit StepUnderflowError(const std::string& what) : std::runtime_error(what) {}
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace gaugeflow
