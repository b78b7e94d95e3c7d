#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dartr {

enum class ErrorCode {
  NonCommensurateGrid,
  DimensionMismatch,
  MissingDerivative,
  QuadratureNoConvergence,
  EmptyExploration,
  DegenerateSupport,
  DimensionOutOfRange,
  SingularBasis,
  NotPositiveDefinite,
  NoConvergence,
  AllZeroSpectrum,
  NegativeLambda,
  DegenerateCurve,
  NoCandidates,
  DegenerateFit,
  InvalidArgument,
  ConfigError,
  IoError,
};

/// Coarse grouping used by the CLI to pick an exit code.
enum class ErrorCategory { Config, Numerical, Io };

std::string_view to_string(ErrorCode code);
ErrorCategory category_of(ErrorCode code);

/// All library failures are reported through this exception type. The code
/// identifies the failure; `stage()` is filled in by the study pipeline so a
/// failing cell can be traced to the step that raised.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string stage = {});

  ErrorCode code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return category_of(code_); }
  const std::string& stage() const noexcept { return stage_; }

  /// Copy of this error annotated with a pipeline stage.
  Error with_stage(std::string stage) const;

 private:
  ErrorCode code_;
  std::string stage_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace dartr
