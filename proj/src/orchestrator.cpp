#include "humbr/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <regex>
#include <semaphore>
#include <set>
#include <sstream>
#include <thread>

#include "http.hpp"
#include "json.hpp"
#include "parallel.hpp"

namespace humbr {
namespace {

using nlohmann::json;

std::uint64_t mix_hash(std::uint64_t h, std::string_view bytes) {
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string format_temperature(double t) {
  std::ostringstream os;
  os << t;
  return os.str();
}

class StubBackend final : public ChatBackend {
 public:
  StubBackend(ProviderSpec spec, std::uint64_t seed) : spec_(std::move(spec)), seed_(seed) {}

  std::string complete(const ChatRequest& request) override {
    const unsigned call = calls_.fetch_add(1);
    const auto& f = spec_.stub.failure;
    if (f == "always" || (f == "transient" && call < spec_.stub.transient_failures)) {
      throw ProviderError(ErrorCode::kProviderUnreachable,
                          "stub " + spec_.id + ": simulated transport failure", 0, true);
    }
    if (f == "auth") {
      throw ProviderError(ErrorCode::kProviderRejected,
                          "stub " + spec_.id + ": HTTP 401", 401, false);
    }
    const std::string& prompt =
        request.messages.empty() ? std::string() : request.messages.back().content;
    if (spec_.stub.responses.empty()) {
      return "[" + request.model + "@" + format_temperature(request.temperature) + "] " + prompt;
    }
    std::uint64_t h = 1469598103934665603ULL ^ seed_;
    h = mix_hash(h, spec_.id);
    h = mix_hash(h, prompt);
    std::uint64_t tbits = 0;
    std::memcpy(&tbits, &request.temperature, sizeof tbits);
    h = mix_hash(h, std::string_view(reinterpret_cast<const char*>(&tbits), sizeof tbits));
    return spec_.stub.responses[h % spec_.stub.responses.size()];
  }

 private:
  ProviderSpec spec_;
  std::uint64_t seed_;
  std::atomic<unsigned> calls_{0};
};

class HttpChatBackend final : public ChatBackend {
 public:
  explicit HttpChatBackend(ProviderSpec spec) : spec_(std::move(spec)) {}

  std::string complete(const ChatRequest& request) override {
    const bool anthropic = spec_.kind == "anthropic";
    json body = {{"model", request.model},
                 {"temperature", request.temperature},
                 {"max_tokens", request.max_tokens},
                 {"messages", json::array()}};
    for (const auto& m : request.messages) {
      body["messages"].push_back({{"role", m.role}, {"content", m.content}});
    }

    detail::HeaderList headers;
    const std::string key = detail::read_credential(spec_.credential_env);
    if (anthropic) {
      if (!key.empty()) headers.emplace_back("x-api-key", key);
      headers.emplace_back("anthropic-version", "2023-06-01");
    } else if (!key.empty()) {
      headers.emplace_back("Authorization", "Bearer " + key);
    }

    const auto res = detail::post_json(spec_.endpoint, headers, body.dump(), spec_.timeout);
    if (res.status < 200 || res.status >= 300) {
      detail::throw_for_status(res.status, "provider " + spec_.id);
    }
    try {
      const json reply = json::parse(res.body);
      if (anthropic) {
        std::string text;
        for (const auto& block : reply.at("content")) {
          if (block.value("type", "text") == "text") text += block.at("text").get<std::string>();
        }
        return text;
      }
      return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
      throw ProviderError(ErrorCode::kProviderRejected,
                          "provider " + spec_.id + ": malformed completion: " + e.what(),
                          res.status, false);
    }
  }

 private:
  ProviderSpec spec_;
};

struct Slot {
  std::size_t provider = 0;
  double temperature = 0.0;
  std::optional<std::string> text;
  std::optional<CallFailure> failure;
};

}  // namespace

void validate(const ProviderSpec& spec) {
  const std::string who = "provider " + spec.id + ": ";
  if (spec.id.empty()) throw Error(ErrorCode::kInvalidArgument, "provider without id");
  if (spec.kind != "openai" && spec.kind != "anthropic" && spec.kind != "stub") {
    throw Error(ErrorCode::kInvalidArgument, who + "unknown kind " + spec.kind);
  }
  if (spec.kind != "stub" && spec.endpoint.find("://") == std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument, who + "endpoint must be a URL");
  }
  if (spec.timeout.count() <= 0) throw Error(ErrorCode::kInvalidArgument, who + "timeout must be > 0");
  if (spec.max_retries < 0) throw Error(ErrorCode::kInvalidArgument, who + "max_retries must be >= 0");
  if (spec.backoff_base.count() < 0) {
    throw Error(ErrorCode::kInvalidArgument, who + "backoff must be >= 0");
  }
  if (spec.max_parallel == 0) throw Error(ErrorCode::kInvalidArgument, who + "max_parallel must be >= 1");
  const auto& f = spec.stub.failure;
  if (f != "none" && f != "always" && f != "auth" && f != "transient") {
    throw Error(ErrorCode::kInvalidArgument, who + "unknown stub failure mode " + f);
  }
}

std::unique_ptr<ChatBackend> make_backend(const ProviderSpec& spec, std::uint64_t seed) {
  validate(spec);
  if (spec.kind == "stub") return std::make_unique<StubBackend>(spec, seed);
  return std::make_unique<HttpChatBackend>(spec);
}

std::string complete_with_retry(ChatBackend& backend, const ProviderSpec& spec,
                                const ChatRequest& request, unsigned* attempts) {
  for (int attempt = 0;; ++attempt) {
    if (attempts) *attempts = static_cast<unsigned>(attempt + 1);
    try {
      return backend.complete(request);
    } catch (const ProviderError& e) {
      if (!e.retryable() || attempt >= spec.max_retries) throw;
    }
    std::this_thread::sleep_for(spec.backoff_base * (1 << std::min(attempt, 16)));
  }
}

GenerationOutcome generate_pool(const GenerationRequest& request,
                                std::span<const ProviderSpec> providers_in,
                                const GenerationOptions& options, const BackendFactory& factory) {
  if (providers_in.empty()) throw Error(ErrorCode::kInvalidArgument, "no providers configured");
  if (request.prompt.empty()) throw Error(ErrorCode::kInvalidArgument, "prompt is empty");
  if (options.parallelism == 0) throw Error(ErrorCode::kInvalidArgument, "parallelism must be >= 1");

  std::vector<ProviderSpec> providers(providers_in.begin(), providers_in.end());
  std::sort(providers.begin(), providers.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < providers.size(); ++i) {
    validate(providers[i]);
    if (i > 0 && providers[i].id == providers[i - 1].id) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate provider id " + providers[i].id);
    }
  }

  std::vector<Slot> slots;
  for (std::size_t p = 0; p < providers.size(); ++p) {
    const auto it = request.ladders.find(providers[p].id);
    std::vector<double> ladder = it != request.ladders.end() ? it->second : request.default_ladder;
    if (ladder.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "empty temperature ladder for " + providers[p].id);
    }
    std::sort(ladder.begin(), ladder.end());
    if (std::adjacent_find(ladder.begin(), ladder.end()) != ladder.end()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "duplicate temperature in ladder for " + providers[p].id);
    }
    for (double t : ladder) {
      if (!(t >= 0.0 && t <= 2.0)) {
        throw Error(ErrorCode::kInvalidArgument, "temperature out of [0, 2] for " + providers[p].id);
      }
      slots.push_back({p, t, std::nullopt, std::nullopt});
    }
  }

  std::vector<std::unique_ptr<ChatBackend>> backends;
  std::vector<std::unique_ptr<std::counting_semaphore<>>> caps;
  for (const auto& spec : providers) {
    backends.push_back(factory(spec, options.seed));
    caps.push_back(std::make_unique<std::counting_semaphore<>>(
        static_cast<std::ptrdiff_t>(spec.max_parallel)));
  }

  detail::parallel_for(slots.size(), options.parallelism, [&](std::size_t i) {
    Slot& slot = slots[i];
    const ProviderSpec& spec = providers[slot.provider];
    ChatRequest chat;
    chat.model = spec.model;
    chat.messages.push_back({"user", request.prompt});
    chat.temperature = slot.temperature;
    chat.max_tokens = request.max_output_tokens;

    auto& cap = *caps[slot.provider];
    cap.acquire();
    unsigned attempts = 0;
    try {
      slot.text = complete_with_retry(*backends[slot.provider], spec, chat, &attempts);
    } catch (const ProviderError& e) {
      slot.failure = CallFailure{spec.id, slot.temperature, e.code(), e.http_status(), attempts,
                                 e.what()};
    } catch (const Error& e) {
      slot.failure = CallFailure{spec.id, slot.temperature, e.code(), 0, attempts, e.what()};
    }
    cap.release();
  });

  GenerationOutcome out;
  out.requested = slots.size();
  out.pool.prompt_id = request.prompt_id;
  for (auto& slot : slots) {
    if (slot.failure) {
      out.failures.push_back(std::move(*slot.failure));
      continue;
    }
    Candidate c;
    c.text = std::move(*slot.text);
    c.model_id = providers[slot.provider].id;
    c.temperature = slot.temperature;
    c.index = out.pool.candidates.size();
    out.pool.candidates.push_back(std::move(c));
  }

  if (out.pool.candidates.empty()) {
    throw GenerationError(ErrorCode::kAllProvidersFailed,
                          "prompt " + request.prompt_id + ": all " +
                              std::to_string(out.requested) + " completions failed",
                          std::move(out.failures));
  }
  const std::size_t min_pool = options.min_pool.value_or((out.requested + 1) / 2);
  if (out.pool.candidates.size() < min_pool) {
    throw GenerationError(ErrorCode::kPoolBelowMinimum,
                          "prompt " + request.prompt_id + ": " +
                              std::to_string(out.pool.candidates.size()) +
                              " candidates survived, minimum is " + std::to_string(min_pool),
                          std::move(out.failures));
  }
  return out;
}

std::string render_usc_prompt(std::string_view question, const CandidatePool& pool) {
  std::string out = "I have generated the following responses to the question: \n";
  out += question;
  out += "\n\n";
  for (std::size_t i = 0; i < pool.candidates.size(); ++i) {
    out += "Response " + std::to_string(i + 1) + ": " + pool.candidates[i].text + "\n";
  }
  out +=
      "\nEvaluate these responses. Select the most consistent response based on majority "
      "consensus. Start your answer with \"The most consistent response is Response X\" "
      "(without quotes).";
  return out;
}

std::optional<std::size_t> parse_usc_reply(std::string_view reply) {
  static const std::regex pattern(R"(the\s+most\s+consistent\s+response\s+is\s+response\s+(\d+))",
                                  std::regex::icase);
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_search(reply.begin(), reply.end(), m, pattern)) return std::nullopt;
  const std::string digits = m[1].str();
  if (digits.size() > 9) return std::nullopt;
  return static_cast<std::size_t>(std::stoul(digits));
}

std::size_t usc_select(const CandidatePool& pool, std::string_view question,
                       const ProviderSpec& judge, std::uint64_t seed,
                       const BackendFactory& factory) {
  if (pool.size() < 2) {
    throw Error(ErrorCode::kPoolTooSmall, "USC needs at least 2 candidates");
  }
  auto backend = factory(judge, seed);
  ChatRequest chat;
  chat.model = judge.model;
  chat.temperature = 0.0;
  chat.messages.push_back({"user", render_usc_prompt(question, pool)});

  std::string reply = complete_with_retry(*backend, judge, chat);
  auto pick = parse_usc_reply(reply);
  if (!pick) {
    chat.messages.push_back({"assistant", reply});
    chat.messages.push_back(
        {"user",
         "Your answer must start with \"The most consistent response is Response X\" "
         "where X is the number of one of the responses above."});
    const std::string first = reply;
    reply = complete_with_retry(*backend, judge, chat);
    pick = parse_usc_reply(reply);
    if (!pick) {
      throw Error(ErrorCode::kUnparseableJudgeOutput,
                  "judge reply has no selection after reprompt; first reply: \"" + first +
                      "\"; second reply: \"" + reply + "\"");
    }
  }
  if (*pick < 1 || *pick > pool.size()) {
    throw Error(ErrorCode::kOutOfRange, "judge selected Response " + std::to_string(*pick) +
                                            " of " + std::to_string(pool.size()));
  }
  return *pick - 1;
}

}  // namespace humbr
