#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace skewmix {

enum class ErrorCode {
  NotPositiveDefinite,
  DimensionMismatch,
  DimensionTooLarge,
  InvalidDof,
  InvalidVariance,
  MomentUndefined,
  EmptyInput,
  InvalidArgument,
  InfeasibleSkewness,
  RejectionBudgetExceeded,
  AllZeroLikelihood,
  DegenerateComponent,
  DofSolveFailed,
  EffectiveSampleSizeTooLow,
  InitFailed,
  ParseError,
  MissingValue,
  LabelNotInteger,
  TooManyClasses,
  LengthMismatch,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// that callers (the CLI in particular) can emit a machine-readable record.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace skewmix
