#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace occu {

enum class ErrorCode {
  kMalformedFile,
  kUnsupportedFormat,
  kInvalidArgument,
  kInvalidSigma,
  kInvalidParams,
  kShapeMismatch,
  kEmptyMask,
  kEmptyCorpus,
  kEmptyStore,
  kEmptyCentroids,
  kUnknownCategory,
  kDuplicateId,
  kNotFound,
  kIOFailure,
  kTooLarge,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for every failure raised by the library. The code
/// is what callers branch on (the HTTP layer maps it to a status).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace occu
