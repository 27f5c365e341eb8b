#pragma once

#include <stdexcept>
#include <string>

namespace mfg {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidGrid : public Error {
 public:
  using Error::Error;
};

/// Congestion parameters outside 1 < beta <= 2, 0 < alpha <= 4(beta-1)/beta.
class ParameterOutOfRange : public Error {
 public:
  using Error::Error;
};

/// eta + epsilon == 0 where the Hamiltonian divides by it.
class DegenerateDensity : public Error {
 public:
  using Error::Error;
};

class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& what, double best_residual)
      : Error(what), best_residual_(best_residual) {}
  double best_residual() const { return best_residual_; }

 private:
  double best_residual_;
};

class FactorizationFailure : public Error {
 public:
  using Error::Error;
};

class StepSizeViolation : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& message)
      : Error(field + ": " + message), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace mfg
