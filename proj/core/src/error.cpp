#include "skosens/error.hpp"

namespace skosens {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kNegativeEntry: return "NegativeEntry";
    case ErrorCode::kNonzeroDiagonal: return "NonzeroDiagonal";
    case ErrorCode::kSpectralRadiusTooLarge: return "SpectralRadiusTooLarge";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNoConvergence: return "NoConvergence";
    case ErrorCode::kSingularSystem: return "SingularSystem";
    case ErrorCode::kMonotonicityViolation: return "MonotonicityViolation";
    case ErrorCode::kInvalidInitialCondition: return "InvalidInitialCondition";
    case ErrorCode::kStateDependentDriftUnsupported: return "StateDependentDriftUnsupported";
    case ErrorCode::kInsufficientSamples: return "InsufficientSamples";
    case ErrorCode::kDomainError: return "DomainError";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace skosens
