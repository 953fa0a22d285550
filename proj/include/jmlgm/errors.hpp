#pragma once

#include <stdexcept>
#include <string>

namespace jmlgm {

enum class ErrorCode {
  NotPositiveDefinite,
  TooFewKnots,
  NonIncreasingKnots,
  InvalidRho,
  NonPositivePrecision,
  NonPositiveTime,
  NonPositiveShape,
  NonPositiveTau,
  UnknownHyperparameter,
  OrphanSurvivalRow,
  DuplicateSurvivalRow,
  WrongNuArity,
  TimeOutsideKnotRange,
  DomainError,
  NewtonDiverged,
  MaxIterations,
  OptimizerFailed,
  SingularHessian,
  EmptyGrid,
  BisectionFailed,
  EmptyData,
  UnknownSubject,
  DimensionTooLarge,
  DegenerateTarget,
  ParseError,
  InvalidConfig,
};

const char* to_string(ErrorCode code);

/// Library-wide exception. `code()` identifies the failure class so callers
/// (notably the CLI) can map it to exit codes without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace jmlgm
