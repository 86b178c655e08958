#include "humbr/error.hpp"

namespace humbr {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kPoolTooSmall: return "pool-too-small";
    case ErrorCode::kMissingEmbedding: return "missing-embedding";
    case ErrorCode::kDimensionMismatch: return "dimension-mismatch";
    case ErrorCode::kEmptyBatch: return "empty-batch";
    case ErrorCode::kZeroVector: return "zero-vector-returned";
    case ErrorCode::kProviderUnreachable: return "provider-unreachable";
    case ErrorCode::kProviderRejected: return "provider-rejected";
    case ErrorCode::kInfeasibleThreshold: return "infeasible-threshold";
    case ErrorCode::kCeilingExceeded: return "enumeration-ceiling-exceeded";
    case ErrorCode::kAllProvidersFailed: return "all-providers-failed";
    case ErrorCode::kPoolBelowMinimum: return "pool-below-minimum";
    case ErrorCode::kUnparseableJudgeOutput: return "unparseable-judge-output";
    case ErrorCode::kOutOfRange: return "out-of-range";
    case ErrorCode::kParse: return "parse-error";
    case ErrorCode::kIo: return "io-error";
    case ErrorCode::kInternal: return "internal-error";
  }
  return "unknown";
}

}  // namespace humbr
