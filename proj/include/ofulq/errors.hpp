#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ofulq {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes do not conform.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Input outside the domain of a formula (non-finite entries, zero covariance, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Caller passed an invalid scalar argument (count of zero, gamma <= 1, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// A matrix required to be stable has spectral radius >= 1.
class InstabilityError : public Error {
 public:
  using Error::Error;
};

/// The Riccati iteration failed to certify a stabilizing solution.
class NotStabilizableError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class RankDeficiencyError : public Error {
 public:
  RankDeficiencyError(const std::string& what, double lambda_min)
      : Error(what), lambda_min_(lambda_min) {}
  double lambda_min() const { return lambda_min_; }

 private:
  double lambda_min_;
};

/// No sample size below the search cap satisfies the excitation inequalities.
class SampleSizeOverflow : public Error {
 public:
  SampleSizeOverflow(const std::string& what, std::string binding)
      : Error(what), binding_(std::move(binding)) {}
  const std::string& binding() const { return binding_; }

 private:
  std::string binding_;
};

class EmptyRegionError : public Error {
 public:
  using Error::Error;
};

class SelectionFailure : public Error {
 public:
  using Error::Error;
};

/// Raised by the trajectory engine's blow-up guard.
class SimulationAbort : public Error {
 public:
  SimulationAbort(const std::string& what, std::size_t step, double state_norm)
      : Error(what), step_(step), state_norm_(state_norm) {}
  std::size_t step() const { return step_; }
  double state_norm() const { return state_norm_; }

 private:
  std::size_t step_;
  double state_norm_;
};

}  // namespace ofulq
