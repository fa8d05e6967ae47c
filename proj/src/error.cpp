#include "pllbench/error.hpp"

namespace pllbench {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kSequenceTooLong: return "SequenceTooLong";
    case ErrorCode::kBackendFailure: return "BackendFailure";
    case ErrorCode::kNonFiniteScore: return "NonFiniteScore";
    case ErrorCode::kInvalidSequence: return "InvalidSequence";
    case ErrorCode::kWrongArity: return "WrongArity";
    case ErrorCode::kEmptyText: return "EmptyText";
    case ErrorCode::kUnencodableText: return "UnencodableText";
    case ErrorCode::kUnknownToken: return "UnknownToken";
    case ErrorCode::kMalformedLine: return "MalformedLine";
    case ErrorCode::kBadAnswerIndex: return "BadAnswerIndex";
    case ErrorCode::kSchemaError: return "SchemaError";
    case ErrorCode::kMissingField: return "MissingField";
    case ErrorCode::kMissingPlaceholder: return "MissingPlaceholder";
    case ErrorCode::kWrongCandidateCount: return "WrongCandidateCount";
    case ErrorCode::kMalformedRow: return "MalformedRow";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kKeyMismatch: return "KeyMismatch";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kRejectedMixedModes: return "RejectedMixedModes";
    case ErrorCode::kModeMismatch: return "ModeMismatch";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace pllbench
