#include "mepath/error.hpp"

namespace mepath {

std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kItemIndexOutOfRange: return "ItemIndexOutOfRange";
    case ErrorCode::kNonBinaryOutcomeForGLM: return "NonBinaryOutcomeForGLM";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kStepSizeTooLarge: return "StepSizeTooLarge";
    case ErrorCode::kNoConvergence: return "NoConvergence";
    case ErrorCode::kOutOfRange: return "OutOfRange";
    case ErrorCode::kGridExceedsPath: return "GridExceedsPath";
    case ErrorCode::kEmptyFold: return "EmptyFold";
    case ErrorCode::kEmptyTestSet: return "EmptyTestSet";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kHeaderMismatch: return "HeaderMismatch";
    case ErrorCode::kDuplicateFeatureRow: return "DuplicateFeatureRow";
    case ErrorCode::kHashMismatch: return "HashMismatch";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kIoError: return "IoError";
  }
  return "UnknownError";
}

int exit_code(ErrorCode code) {
  // 1 is reserved for unexpected failures and 2 for command-line usage errors.
  return 10 + static_cast<int>(code);
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_name(code)) + ": " + message),
      code_(code) {}

}  // namespace mepath
