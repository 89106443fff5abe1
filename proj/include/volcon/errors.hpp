#pragma once

#include <stdexcept>
#include <string>

namespace volcon {

//! Invalid or unsupported mesh input (open, degenerate, non-convex, empty).
class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

//! The overlap direction cannot be resolved (weighted sum cancels out).
class IndeterminateDirection : public std::runtime_error {
 public:
  IndeterminateDirection() : std::runtime_error("indeterminate direction") {}
};

//! Invalid parameter values handed to a contact or dynamics routine.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

//! Adaptive integration could not make progress.
class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, double t)
      : std::runtime_error(what + " at t=" + std::to_string(t)), time_(t) {}

  double time() const { return time_; }

 private:
  double time_;
};

}  // namespace volcon
