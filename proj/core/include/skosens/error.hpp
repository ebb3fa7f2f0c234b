#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace skosens {

enum class ErrorCode {
  kNegativeEntry,
  kNonzeroDiagonal,
  kSpectralRadiusTooLarge,
  kShapeMismatch,
  kDimensionMismatch,
  kNoConvergence,
  kSingularSystem,
  kMonotonicityViolation,
  kInvalidInitialCondition,
  kStateDependentDriftUnsupported,
  kInsufficientSamples,
  kDomainError,
  kInvalidArgument,
  kConfigError,
  kIoError,
};

/// Stable identifier used in JSON error documents (e.g. "NegativeEntry").
std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace skosens
