#include "sketchxai/util/error.hpp"

namespace sketchxai {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kValidation: return "validation";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kMissingCategory: return "missing_category";
    case ErrorCode::kEmptyCategory: return "empty_category";
    case ErrorCode::kInsufficientSamples: return "insufficient_samples";
    case ErrorCode::kConfigMismatch: return "config_mismatch";
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kNumerical: return "numerical";
    case ErrorCode::kUnsupported: return "unsupported";
  }
  return "unknown";
}

}  // namespace sketchxai
