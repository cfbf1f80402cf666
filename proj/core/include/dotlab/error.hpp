#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace dotlab {

// Base for every failure raised by the library. Callers that only care about
// "the physics or the input was bad" catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or invalid device configuration. `field()` is a JSON-pointer-like
// path to the offending entry ("gates[3].span").
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(field.empty() ? message : field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// A value outside the domain of a physical model (|detuning| >= U, merged
// dots, singular matrices, breakdown limit exceeded, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// An iterative procedure stopped without meeting its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& message, std::size_t iterations, double residual)
      : Error(message + " (iterations=" + std::to_string(iterations) +
              ", residual=" + std::to_string(residual) + ")"),
        iterations_(iterations),
        residual_(residual) {}
  std::size_t iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }

 private:
  std::size_t iterations_;
  double residual_;
};

}  // namespace dotlab
