#include "dartr/error.hpp"

namespace dartr {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonCommensurateGrid: return "NonCommensurateGrid";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::MissingDerivative: return "MissingDerivative";
    case ErrorCode::QuadratureNoConvergence: return "QuadratureNoConvergence";
    case ErrorCode::EmptyExploration: return "EmptyExploration";
    case ErrorCode::DegenerateSupport: return "DegenerateSupport";
    case ErrorCode::DimensionOutOfRange: return "DimensionOutOfRange";
    case ErrorCode::SingularBasis: return "SingularBasis";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::AllZeroSpectrum: return "AllZeroSpectrum";
    case ErrorCode::NegativeLambda: return "NegativeLambda";
    case ErrorCode::DegenerateCurve: return "DegenerateCurve";
    case ErrorCode::NoCandidates: return "NoCandidates";
    case ErrorCode::DegenerateFit: return "DegenerateFit";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

ErrorCategory category_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::InvalidArgument:
      return ErrorCategory::Config;
    case ErrorCode::IoError:
      return ErrorCategory::Io;
    default:
      return ErrorCategory::Numerical;
  }
}

Error::Error(ErrorCode code, const std::string& message, std::string stage)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      stage_(std::move(stage)) {}

Error Error::with_stage(std::string stage) const {
  Error copy = *this;
  copy.stage_ = std::move(stage);
  return copy;
}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace dartr
