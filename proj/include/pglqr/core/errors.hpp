#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pglqr {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: bad dimensions, non-symmetric or indefinite weights, bad schema.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Out-of-range numeric argument (negative radius, zero budget, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Misuse of an API (e.g. a step schedule that needs data it was not given).
class UsageError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Closed loop not Schur stable; carries the spectral radius that was observed.
class InstabilityError : public Error {
 public:
  InstabilityError(const std::string& what, double radius)
      : Error(what + " (spectral radius " + std::to_string(radius) + ")"), radius_(radius) {}
  double spectral_radius() const noexcept { return radius_; }

 private:
  double radius_;
};

// Non-finite or otherwise unusable floating point result.
class NumericError : public Error {
 public:
  using Error::Error;
};

class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, double residual, std::size_t iterations)
      : Error(what + " (residual " + std::to_string(residual) + " after " +
              std::to_string(iterations) + " iterations)"),
        residual_(residual),
        iterations_(iterations) {}
  double last_residual() const noexcept { return residual_; }
  std::size_t iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  std::size_t iterations_;
};

}  // namespace pglqr
