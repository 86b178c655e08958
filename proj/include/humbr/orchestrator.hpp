#pragma once

// Temperature-stratified fan-out to chat-completion backends, and the
// Universal Self-Consistency baseline.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "humbr/consensus.hpp"
#include "humbr/error.hpp"

namespace humbr {

/// Offline backend behaviour for kind == "stub".
struct StubBehavior {
  /// Reply pool. Empty: reply "[model@T] <prompt>". Otherwise a reply is
  /// picked by hashing (seed, provider id, prompt, temperature).
  std::vector<std::string> responses;
  /// "none", "always" (retryable transport error), "auth" (non-retryable
  /// 401) or "transient" (fails the first `transient_failures` calls).
  std::string failure = "none";
  unsigned transient_failures = 0;
};

struct ProviderSpec {
  std::string id;
  std::string kind = "openai";  // "openai", "anthropic" or "stub"
  std::string endpoint;         // full URL of the completion route
  std::string model;
  std::string credential_env;   // env var name; the value is never stored
  std::chrono::milliseconds timeout{60000};
  int max_retries = 2;
  std::chrono::milliseconds backoff_base{500};
  unsigned max_parallel = 4;    // per-provider in-flight cap
  StubBehavior stub;
};

void validate(const ProviderSpec& spec);

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  unsigned max_tokens = 1024;
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  /// Returns the generated text or throws ProviderError.
  virtual std::string complete(const ChatRequest& request) = 0;
};

using BackendFactory =
    std::function<std::unique_ptr<ChatBackend>(const ProviderSpec&, std::uint64_t seed)>;

/// Default factory: HTTP adapters for "openai"/"anthropic", the deterministic
/// stub for "stub".
std::unique_ptr<ChatBackend> make_backend(const ProviderSpec& spec, std::uint64_t seed);

/// Calls backend.complete, retrying retryable ProviderErrors up to
/// spec.max_retries times with backoff_base * 2^attempt sleeps.
std::string complete_with_retry(ChatBackend& backend, const ProviderSpec& spec,
                                const ChatRequest& request, unsigned* attempts = nullptr);

struct GenerationRequest {
  std::string prompt_id;
  std::string prompt;
  /// Per-provider ladders; providers not listed use the default ladder.
  std::map<std::string, std::vector<double>> ladders;
  std::vector<double> default_ladder{0.0, 0.25, 0.5, 0.75};
  unsigned max_output_tokens = 1024;
};

struct GenerationOptions {
  std::size_t parallelism = 8;        // global in-flight cap
  std::optional<std::size_t> min_pool;  // default ceil(N / 2)
  std::uint64_t seed = 0;
};

struct CallFailure {
  std::string provider_id;
  double temperature = 0.0;
  ErrorCode code = ErrorCode::kInternal;
  int http_status = 0;
  unsigned attempts = 0;
  std::string message;
};

struct GenerationOutcome {
  CandidatePool pool;
  std::size_t requested = 0;
  std::vector<CallFailure> failures;  // non-empty means a degraded pool
};

/// Thrown when generation cannot produce a usable pool.
class GenerationError : public Error {
 public:
  GenerationError(ErrorCode code, const std::string& message, std::vector<CallFailure> failures)
      : Error(code, message), failures_(std::move(failures)) {}
  const std::vector<CallFailure>& failures() const { return failures_; }

 private:
  std::vector<CallFailure> failures_;
};

/// One completion per (provider, ladder temperature), dispatched concurrently
/// under the global cap and each provider's max_parallel. The pool is ordered
/// by (provider id, temperature). Throws GenerationError with
/// kAllProvidersFailed when nothing succeeded, kPoolBelowMinimum when fewer
/// than min_pool candidates survived.
GenerationOutcome generate_pool(const GenerationRequest& request,
                                std::span<const ProviderSpec> providers,
                                const GenerationOptions& options,
                                const BackendFactory& factory = make_backend);

/// The USC meta-prompt with numbered responses.
std::string render_usc_prompt(std::string_view question, const CandidatePool& pool);

/// Parses "The most consistent response is Response X" and returns X.
std::optional<std::size_t> parse_usc_reply(std::string_view reply);

/// Asks the judge to pick the most consistent response; returns its 0-based
/// index. An unparseable reply gets one reprompt; a second failure throws
/// kUnparseableJudgeOutput carrying the raw text. X outside 1..N throws
/// kOutOfRange.
std::size_t usc_select(const CandidatePool& pool, std::string_view question,
                       const ProviderSpec& judge, std::uint64_t seed = 0,
                       const BackendFactory& factory = make_backend);

}  // namespace humbr
