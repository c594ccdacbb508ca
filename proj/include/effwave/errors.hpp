#pragma once

#include <stdexcept>
#include <string>

namespace effwave {

/// Exit codes used by the command line tool.
enum class ExitCode : int {
  success = 0,
  config = 1,
  numerical = 2,
  acceptance = 3,
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ExitCode exit_code() const noexcept { return ExitCode::numerical; }
};

/// Bad input: unknown names, missing keys, malformed files, CFL violations.
class ConfigError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::config; }
};

/// A caller broke a documented precondition.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, int iterations, double residual)
      : NumericalError(what), iterations_(iterations), residual_(residual) {}
  int iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }

 private:
  int iterations_;
  double residual_;
};

class DefinitenessError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class InstabilityError : public NumericalError {
 public:
  InstabilityError(const std::string& what, long step)
      : NumericalError(what), step_(step) {}
  long step() const noexcept { return step_; }

 private:
  long step_;
};

class CompatibilityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DependencyError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace effwave
