#pragma once

#include <stdexcept>
#include <string>

namespace humbr {

enum class ErrorCode {
  kInvalidArgument,
  kPoolTooSmall,
  kMissingEmbedding,
  kDimensionMismatch,
  kEmptyBatch,
  kZeroVector,
  kProviderUnreachable,
  kProviderRejected,
  kInfeasibleThreshold,
  kCeilingExceeded,
  kAllProvidersFailed,
  kPoolBelowMinimum,
  kUnparseableJudgeOutput,
  kOutOfRange,
  kParse,
  kIo,
  kInternal,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Failure talking to a remote backend. http_status is 0 for transport errors.
class ProviderError : public Error {
 public:
  ProviderError(ErrorCode code, const std::string& message, int http_status,
                bool retryable)
      : Error(code, message), http_status_(http_status), retryable_(retryable) {}

  int http_status() const { return http_status_; }
  bool retryable() const { return retryable_; }

 private:
  int http_status_;
  bool retryable_;
};

}  // namespace humbr
