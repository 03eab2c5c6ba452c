#pragma once

#include <stdexcept>
#include <string>

namespace hase {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid construction parameters (counts, gains, bounds).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A matrix argument is not symmetric, not PSD, or singular where SPD is required.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Stereo geometry with non-positive disparity.
class DegenerateGeometryError : public Error {
 public:
  using Error::Error;
};

/// The target cannot be observed from the requested pose.
class TargetNotVisible : public Error {
 public:
  using Error::Error;
};

/// Least-squares training data does not determine the coefficients.
class IllConditionedError : public Error {
 public:
  using Error::Error;
};

class NonConvergedError : public Error {
 public:
  NonConvergedError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// A policy rollout entered a cycle of two or more distinct states.
class OptimalityViolation : public Error {
 public:
  using Error::Error;
};

class ConfigurationError : public Error {
 public:
  using Error::Error;
};

/// A cluster exceeds the configured maximum number of targets.
class ClusterSizeError : public Error {
 public:
  using Error::Error;
};

/// The fleet simulation made no progress for too many ticks.
class StallError : public Error {
 public:
  StallError(const std::string& what, std::string dump)
      : Error(what), dump_(std::move(dump)) {}
  const std::string& dump() const { return dump_; }

 private:
  std::string dump_;
};

/// Malformed scenario file; `pointer()` is a JSON pointer into the document.
class ScenarioError : public Error {
 public:
  ScenarioError(const std::string& pointer, const std::string& what)
      : Error(pointer + ": " + what), pointer_(pointer) {}
  const std::string& pointer() const { return pointer_; }

 private:
  std::string pointer_;
};

}  // namespace hase
