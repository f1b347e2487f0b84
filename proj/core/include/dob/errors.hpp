#pragma once

#include <stdexcept>
#include <string>

namespace dob {

/// Input violates a documented precondition (bad sampling time, negative
/// inertia, eigenvalue outside the unit disc, unknown parameter name, ...).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An iterative solve did not reach its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Observer or loop gains violate a hard stability constraint and the caller
/// did not opt in to running unstable configurations.
class ConstraintViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dob
