#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pllbench {

enum class ErrorCode {
  // scoring
  kSequenceTooLong,
  kBackendFailure,
  kNonFiniteScore,
  kInvalidSequence,
  kWrongArity,
  // backends
  kEmptyText,
  kUnencodableText,
  kUnknownToken,
  // datasets
  kMalformedLine,
  kBadAnswerIndex,
  kSchemaError,
  kMissingField,
  kMissingPlaceholder,
  kWrongCandidateCount,
  kMalformedRow,
  kIndexOutOfRange,
  kKeyMismatch,
  // reporting
  kEmptyInput,
  kRejectedMixedModes,
  kModeMismatch,
  kIoError,
  // configuration
  kConfigError,
};

std::string_view error_code_name(ErrorCode code);

// Every failure surfaced by the library carries one of the codes above so
// callers (the CLI in particular) can map them onto exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace pllbench
