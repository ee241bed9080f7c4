#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mixctl {

/// Base class for failures of the numerics (as opposed to bad arguments,
/// which are reported with std::invalid_argument).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A quantity that must be real, nonnegative, or inside a known range came
/// out of a computation beyond rounding slack.
class NumericalConsistencyError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Input matrix is not an admissible density matrix.
class InvalidStateError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class PropagationAccuracyError : public NumericalError {
 public:
  PropagationAccuracyError(std::size_t step, const std::string& what)
      : NumericalError("propagation step " + std::to_string(step) + ": " + what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

class NonConvergenceError : public NumericalError {
 public:
  NonConvergenceError(double residual, const std::string& what)
      : NumericalError(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Bloch angle requested for a maximally mixed state.
class UndefinedAngleError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Gradient of the split functional requested at a maximally mixed state.
class DegenerateStateError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class MonotonicityViolation : public NumericalError {
 public:
  MonotonicityViolation(std::size_t iteration, double previous, double current)
      : NumericalError("Krotov iteration " + std::to_string(iteration) + " increased J from " +
                       std::to_string(previous) + " to " + std::to_string(current)),
        previous_(previous),
        current_(current) {}
  double previous() const noexcept { return previous_; }
  double current() const noexcept { return current_; }

 private:
  double previous_;
  double current_;
};

}  // namespace mixctl
