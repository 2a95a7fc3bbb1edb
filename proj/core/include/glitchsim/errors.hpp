#pragma once

#include <stdexcept>
#include <string>

namespace glitchsim {

enum class ErrorCode {
  BadMagic,
  TruncatedFile,
  DimensionMismatch,
  ValueOutOfRange,
  VersionMismatch,
  ChecksumMismatch,
  ShapeMismatch,
  SyntaxError,
  LengthOverflow,
  ArgumentOverflow,
  IndexOutOfRange,
  InvalidArgument,
  DatasetNotFound,
  IoError,
  InvariantViolation,
};

const char* to_string(ErrorCode code);

/// True for errors caused by malformed or missing input data (as opposed to
/// bad arguments or internal faults).
bool is_input_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace glitchsim
