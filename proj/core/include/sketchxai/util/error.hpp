#pragma once

#include <stdexcept>
#include <string>

namespace sketchxai {

// Machine-readable error categories. The CLI prints the code verbatim and the
// service maps them onto HTTP status classes.
enum class ErrorCode {
  kInvalidArgument,
  kValidation,
  kNotFound,
  kMissingCategory,
  kEmptyCategory,
  kInsufficientSamples,
  kConfigMismatch,
  kFormat,
  kIo,
  kNumerical,
  kUnsupported,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

// Validation failure that carries a JSON-pointer-like field path, e.g.
// "strokes[2][1]".
class ValidationError : public Error {
public:
  ValidationError(std::string field, const std::string& message)
      : Error(ErrorCode::kValidation, field + ": " + message), field_(std::move(field)), detail_(message) {}

  const std::string& field() const noexcept { return field_; }
  // The message without the field prefix.
  const std::string& detail() const noexcept { return detail_; }

private:
  std::string field_;
  std::string detail_;
};

}  // namespace sketchxai
