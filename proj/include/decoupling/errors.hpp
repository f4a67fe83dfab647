#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace decoupling {

enum class ErrorCode {
  NotHermitian,
  ConvergenceFailure,
  Singular,
  EmptySpectrum,
  ResolventSingular,
  InvalidParams,
  NotConverged,
  Diverged,
  Inadmissible,
  EigFailure,
  NonRealSpectrum,
  IncompleteEigensystem,
  DimensionMismatch,
  Parse,
  Io,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotHermitian: return "NotHermitian";
    case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::Singular: return "Singular";
    case ErrorCode::EmptySpectrum: return "EmptySpectrum";
    case ErrorCode::ResolventSingular: return "ResolventSingular";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::Diverged: return "Diverged";
    case ErrorCode::Inadmissible: return "Inadmissible";
    case ErrorCode::EigFailure: return "EigFailure";
    case ErrorCode::NonRealSpectrum: return "NonRealSpectrum";
    case ErrorCode::IncompleteEigensystem: return "IncompleteEigensystem";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::Parse: return "Parse";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can dispatch without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised when the fixed-point iteration exhausts its budget.
class NotConvergedError : public Error {
 public:
  NotConvergedError(int iterations, double last_residual)
      : Error(ErrorCode::NotConverged,
              "no convergence after " + std::to_string(iterations) +
                  " iterations, last residual " + std::to_string(last_residual)),
        iterations_(iterations),
        last_residual_(last_residual) {}

  int iterations() const noexcept { return iterations_; }
  double last_residual() const noexcept { return last_residual_; }

 private:
  int iterations_;
  double last_residual_;
};

}  // namespace decoupling
