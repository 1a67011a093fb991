#pragma once

#include <stdexcept>
#include <string>

namespace ortho {

/// Shape or arity mismatch between operands.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A statistic needs more rows (samples) than it was given.
class InsufficientSamplesError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Caller broke a documented precondition (e.g. non-scalar tape root).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Iterative solver ran out of sweeps.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what + " (residual " + std::to_string(residual) + ")"),
        residual_(residual) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ortho
