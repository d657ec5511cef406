#include "hirl/error.hpp"

namespace hirl {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDegenerateTrajectory: return "degenerate-trajectory";
    case ErrorCode::kProjectionFailure: return "projection-failure";
    case ErrorCode::kExtrapolation: return "extrapolation";
    case ErrorCode::kInvalidDecision: return "invalid-decision";
    case ErrorCode::kOutOfRange: return "out-of-range";
    case ErrorCode::kCrossingOrder: return "crossing-order";
    case ErrorCode::kIllDefinedBearing: return "ill-defined-bearing";
    case ErrorCode::kDependency: return "dependency";
    case ErrorCode::kContract: return "contract";
    case ErrorCode::kNumericalFailure: return "numerical-failure";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kData: return "data";
    case ErrorCode::kConfigMismatch: return "config-mismatch";
    case ErrorCode::kValidation: return "validation";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace hirl
