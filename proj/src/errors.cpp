#include "jmlgm/errors.hpp"

namespace jmlgm {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::TooFewKnots: return "TooFewKnots";
    case ErrorCode::NonIncreasingKnots: return "NonIncreasingKnots";
    case ErrorCode::InvalidRho: return "InvalidRho";
    case ErrorCode::NonPositivePrecision: return "NonPositivePrecision";
    case ErrorCode::NonPositiveTime: return "NonPositiveTime";
    case ErrorCode::NonPositiveShape: return "NonPositiveShape";
    case ErrorCode::NonPositiveTau: return "NonPositiveTau";
    case ErrorCode::UnknownHyperparameter: return "UnknownHyperparameter";
    case ErrorCode::OrphanSurvivalRow: return "OrphanSurvivalRow";
    case ErrorCode::DuplicateSurvivalRow: return "DuplicateSurvivalRow";
    case ErrorCode::WrongNuArity: return "WrongNuArity";
    case ErrorCode::TimeOutsideKnotRange: return "TimeOutsideKnotRange";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::NewtonDiverged: return "NewtonDiverged";
    case ErrorCode::MaxIterations: return "MaxIterations";
    case ErrorCode::OptimizerFailed: return "OptimizerFailed";
    case ErrorCode::SingularHessian: return "SingularHessian";
    case ErrorCode::EmptyGrid: return "EmptyGrid";
    case ErrorCode::BisectionFailed: return "BisectionFailed";
    case ErrorCode::EmptyData: return "EmptyData";
    case ErrorCode::UnknownSubject: return "UnknownSubject";
    case ErrorCode::DimensionTooLarge: return "DimensionTooLarge";
    case ErrorCode::DegenerateTarget: return "DegenerateTarget";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

}  // namespace jmlgm
