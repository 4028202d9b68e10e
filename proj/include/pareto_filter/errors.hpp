#pragma once

#include <stdexcept>
#include <string>

namespace pareto_filter {

// Base class for all library errors. Subclasses distinguish the failure
// classes the CLI maps to exit codes.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Inputs have inconsistent shapes (non-square, mismatched rows/cols).
class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what) : Error(what) {}
};

// Inputs violate a documented precondition (asymmetry, indefiniteness,
// bad parameter ranges, malformed configuration values).
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(what) {}
};

// A matrix that must be Schur stable is not (spectral radius >= 1).
class InstabilityError : public Error {
 public:
  explicit InstabilityError(const std::string& what) : Error(what) {}
};

// An iterative solver exhausted its iteration budget without meeting
// its residual target.
class ConvergenceError : public Error {
 public:
  explicit ConvergenceError(const std::string& what) : Error(what) {}
};

// A requested accuracy target lies outside the attainable range.
class InfeasibleTargetError : public Error {
 public:
  explicit InfeasibleTargetError(const std::string& what) : Error(what) {}
};

}  // namespace pareto_filter
