#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mclp {

enum class ErrorCode {
  kLengthMismatch,
  kGrammarViolation,
  kConfigInvalid,
  kTranscriptMismatch,
  kEmptyTarget,
  kInstanceTooLarge,
  kEmptyReference,
  kMalformedLine,
  kUnsortedInput,
  kMissingLabel,
  kInsufficientScenes,
  kTooFewRecords,
  kGroupTooSmall,
  kNonFiniteLoss,
  kEmptyDataset,
  kMissingInput,
  kChecksumMismatch,
  kParseError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kGrammarViolation: return "GrammarViolation";
    case ErrorCode::kConfigInvalid: return "ConfigInvalid";
    case ErrorCode::kTranscriptMismatch: return "TranscriptMismatch";
    case ErrorCode::kEmptyTarget: return "EmptyTarget";
    case ErrorCode::kInstanceTooLarge: return "InstanceTooLarge";
    case ErrorCode::kEmptyReference: return "EmptyReference";
    case ErrorCode::kMalformedLine: return "MalformedLine";
    case ErrorCode::kUnsortedInput: return "UnsortedInput";
    case ErrorCode::kMissingLabel: return "MissingLabel";
    case ErrorCode::kInsufficientScenes: return "InsufficientScenes";
    case ErrorCode::kTooFewRecords: return "TooFewRecords";
    case ErrorCode::kGroupTooSmall: return "GroupTooSmall";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kMissingInput: return "MissingInput";
    case ErrorCode::kChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::kParseError: return "ParseError";
  }
  return "Unknown";
}

/// Exception carrying a machine-readable error code. Every module reports
/// contract violations through this type.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace mclp
