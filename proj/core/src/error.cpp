#include "lcd/error.hpp"

namespace lcd {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kDecode: return "DecodeError";
    case ErrorCode::kInvalidSize: return "InvalidSize";
    case ErrorCode::kInvalidParams: return "InvalidParams";
    case ErrorCode::kImageTooSmall: return "ImageTooSmall";
    case ErrorCode::kInsufficientData: return "InsufficientData";
    case ErrorCode::kDegenerateCovariance: return "DegenerateCovariance";
    case ErrorCode::kDimMismatch: return "DimMismatch";
    case ErrorCode::kNumericalFailure: return "NumericalFailure";
    case ErrorCode::kNonFiniteInput: return "NonFiniteInput";
    case ErrorCode::kEmptyFeatureSet: return "EmptyFeatureSet";
    case ErrorCode::kFormat: return "FormatError";
    case ErrorCode::kUnknownLayer: return "UnknownLayer";
    case ErrorCode::kEmptyDatabase: return "EmptyDatabase";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kUnknownQuery: return "UnknownQuery";
    case ErrorCode::kEmptyGroundTruth: return "EmptyGroundTruth";
    case ErrorCode::kEmptyCurve: return "EmptyCurve";
    case ErrorCode::kConfig: return "ConfigError";
  }
  return "Error";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code) {}

}  // namespace lcd
