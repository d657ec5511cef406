#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hirl {

enum class ErrorCode {
  kDegenerateTrajectory,
  kProjectionFailure,
  kExtrapolation,
  kInvalidDecision,
  kOutOfRange,
  kCrossingOrder,
  kIllDefinedBearing,
  kDependency,
  kContract,
  kNumericalFailure,
  kParse,
  kData,
  kConfigMismatch,
  kValidation,
  kIo,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library; the code drives CLI exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) fail(code, what);
}

}  // namespace hirl
