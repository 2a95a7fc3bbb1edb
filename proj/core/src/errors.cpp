#include "glitchsim/errors.hpp"

namespace glitchsim {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ValueOutOfRange: return "ValueOutOfRange";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::LengthOverflow: return "LengthOverflow";
    case ErrorCode::ArgumentOverflow: return "ArgumentOverflow";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DatasetNotFound: return "DatasetNotFound";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
  }
  return "Unknown";
}

bool is_input_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadMagic:
    case ErrorCode::TruncatedFile:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::ValueOutOfRange:
    case ErrorCode::VersionMismatch:
    case ErrorCode::ChecksumMismatch:
    case ErrorCode::ShapeMismatch:
    case ErrorCode::SyntaxError:
    case ErrorCode::LengthOverflow:
    case ErrorCode::DatasetNotFound:
    case ErrorCode::IoError:
      return true;
    default:
      return false;
  }
}

}  // namespace glitchsim
