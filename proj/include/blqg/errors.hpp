#pragma once

#include <stdexcept>
#include <string>

namespace blqg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inconsistent matrix shapes between cooperating objects.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A standing assumption (controllability, observability, definiteness,
/// rank) does not hold.
class AssumptionError : public Error {
 public:
  using Error::Error;
};

/// Iterative solver failure, unstable closed loop, divergent rollout or
/// exhausted line search.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Closed-loop matrix with spectral radius >= 1.
class UnstableGainError : public NumericalError {
 public:
  UnstableGainError(const std::string& what, double spectral_radius)
      : NumericalError(what), spectral_radius_(spectral_radius) {}
  double spectral_radius() const { return spectral_radius_; }

 private:
  double spectral_radius_;
};

/// Malformed configuration or data file.
class InputFormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace blqg
