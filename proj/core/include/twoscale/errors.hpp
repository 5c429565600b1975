#pragma once

#include <stdexcept>
#include <string>

namespace twoscale {

/// A linear or nonlinear solve did not reach its contract (singular system, residual too large,
/// unreachable constraint).
class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& what, double residual = -1.0)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Invalid run configuration; the message names the offending key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace twoscale
