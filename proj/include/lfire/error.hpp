#pragma once

#include <stdexcept>
#include <string>

namespace lfire {

// Root of the library's exception hierarchy. The CLI maps ConfigError to exit
// code 2 and NumericalError to exit code 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Input data for which a statistic or regression is undefined
/// (zero variance, singular design, zero reference value).
class DegenerateInput : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// The Lorenz integrator produced a non-finite state.
class Divergence : public NumericalError {
 public:
  Divergence(const std::string& what, int step) : NumericalError(what), step_(step) {}
  [[nodiscard]] int step() const noexcept { return step_; }

 private:
  int step_;
};

/// Coordinate descent exceeded its sweep budget.
class NonConvergence : public NumericalError {
 public:
  NonConvergence(const std::string& what, int lambda_index)
      : NumericalError(what), lambda_index_(lambda_index) {}
  [[nodiscard]] int lambda_index() const noexcept { return lambda_index_; }

 private:
  int lambda_index_;
};

/// Every grid node or particle ended with zero posterior mass.
class DegeneratePosterior : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace lfire
