#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vpme {

enum class ErrorCode {
  GridMismatch,
  InvalidField,
  InvalidParameter,
  ConvergenceFailure,
  InvalidNormalization,
  GuardViolation,
  InvalidSpec,
  Truncation,
  StaleState,
  IdMismatch,
  SizeMismatch,
  CapExceeded,
  EmptyHistory,
  Unsynchronized,
  Cfl,
  Io,
  Parse,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised when an iterative solver exhausts its budget; carries the last residual.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual, int iterations)
      : Error(ErrorCode::ConvergenceFailure, what), residual_(residual), iterations_(iterations) {}

  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

/// Fixed-charge normalisation fell below the L_K cutoff.
class GuardError : public Error {
 public:
  GuardError(const std::string& what, double mass, double lower_bound)
      : Error(ErrorCode::GuardViolation, what), mass_(mass), lower_bound_(lower_bound) {}

  double electron_mass() const noexcept { return mass_; }
  double bouchut_bound() const noexcept { return lower_bound_; }

 private:
  double mass_;
  double lower_bound_;
};

/// Step failure with the simulation time at which it happened.
class StepError : public Error {
 public:
  StepError(ErrorCode code, const std::string& what, double time)
      : Error(code, what + " (t=" + std::to_string(time) + ")"), time_(time) {}

  double time() const noexcept { return time_; }

 private:
  double time_;
};

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

}  // namespace vpme
