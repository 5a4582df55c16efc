#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mepath {

// Every failure the library reports carries one of these codes. The CLI maps
// them onto a frozen exit-code table (see README).
enum class ErrorCode {
  kEmptyDataset,
  kItemIndexOutOfRange,
  kNonBinaryOutcomeForGLM,
  kDimensionMismatch,
  kStepSizeTooLarge,
  kNoConvergence,
  kOutOfRange,
  kGridExceedsPath,
  kEmptyFold,
  kEmptyTestSet,
  kParseError,
  kHeaderMismatch,
  kDuplicateFeatureRow,
  kHashMismatch,
  kInvalidConfig,
  kIoError,
};

std::string_view error_name(ErrorCode code);
int exit_code(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  std::string_view name() const { return error_name(code_); }

 private:
  ErrorCode code_;
};

}  // namespace mepath
