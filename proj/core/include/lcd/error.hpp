#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lcd {

enum class ErrorCode {
  kIo,
  kDecode,
  kInvalidSize,
  kInvalidParams,
  kImageTooSmall,
  kInsufficientData,
  kDegenerateCovariance,
  kDimMismatch,
  kNumericalFailure,
  kNonFiniteInput,
  kEmptyFeatureSet,
  kFormat,
  kUnknownLayer,
  kEmptyDatabase,
  kDuplicateId,
  kUnknownQuery,
  kEmptyGroundTruth,
  kEmptyCurve,
  kConfig,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library. The code identifies the error class;
/// the message carries the offending values.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace lcd
