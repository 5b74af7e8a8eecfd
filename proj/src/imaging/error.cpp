#include "occu/error.hpp"

namespace occu {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedFile: return "MalformedFile";
    case ErrorCode::kUnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kInvalidSigma: return "InvalidSigma";
    case ErrorCode::kInvalidParams: return "InvalidParams";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kEmptyMask: return "EmptyMask";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kEmptyStore: return "EmptyStore";
    case ErrorCode::kEmptyCentroids: return "EmptyCentroids";
    case ErrorCode::kUnknownCategory: return "UnknownCategory";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kNotFound: return "NotFound";
    case ErrorCode::kIOFailure: return "IOFailure";
    case ErrorCode::kTooLarge: return "TooLarge";
  }
  return "Unknown";
}

}  // namespace occu
