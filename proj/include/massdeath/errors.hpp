#pragma once

#include <stdexcept>
#include <string>

namespace massdeath {

/// Base for failures where a computation ran but its result cannot be
/// trusted to the requested accuracy. The CLI maps these to exit code 2.
class NumericalGuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Alternating-sum cancellation exceeded the configured conditioning bound.
class ConditioningError : public NumericalGuardError {
 public:
  ConditioningError(const std::string& what, double condition)
      : NumericalGuardError(what), condition_(condition) {}
  double condition() const { return condition_; }

 private:
  double condition_;
};

/// A probability fell below the representable floor; use the log-space variant.
class UnderflowError : public NumericalGuardError {
 public:
  using NumericalGuardError::NumericalGuardError;
};

/// A series hit its term cap before meeting the stopping rule.
class NonConvergenceError : public NumericalGuardError {
 public:
  using NumericalGuardError::NumericalGuardError;
};

}  // namespace massdeath
