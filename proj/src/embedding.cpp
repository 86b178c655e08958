#include "humbr/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "http.hpp"
#include "humbr/error.hpp"
#include "humbr/textsim.hpp"
#include "json.hpp"
#include "parallel.hpp"

namespace humbr {
namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;
constexpr std::string_view kEmptyTextToken = "\x01<empty>";

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t salt) {
  std::uint64_t h = kFnvOffset ^ (salt * kFnvPrime);
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

}  // namespace

EmbeddingVector EmbeddingVector::normalized(std::vector<double> raw) {
  double sum_sq = 0.0;
  for (double x : raw) {
    if (!std::isfinite(x)) {
      throw Error(ErrorCode::kZeroVector, "embedding has a non-finite component");
    }
    sum_sq += x * x;
  }
  if (raw.empty() || !(sum_sq > 0.0)) {
    throw Error(ErrorCode::kZeroVector, "embedding is a zero vector");
  }
  const double inv = 1.0 / std::sqrt(sum_sq);
  for (double& x : raw) x *= inv;
  return EmbeddingVector(std::move(raw));
}

double cosine(const EmbeddingVector& u, const EmbeddingVector& v) {
  if (u.dim() != v.dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "cosine: dimension " + std::to_string(u.dim()) + " vs " +
                    std::to_string(v.dim()));
  }
  double dot = 0.0;
  const auto a = u.values();
  const auto b = v.values();
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  return std::clamp(dot, -1.0, 1.0);
}

void validate(const EmbeddingProviderConfig& cfg) {
  if (cfg.batch_size == 0) {
    throw Error(ErrorCode::kInvalidArgument, "embedding batch_size must be >= 1");
  }
  if (cfg.timeout.count() <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "embedding timeout must be > 0");
  }
  if (cfg.parallelism == 0) {
    throw Error(ErrorCode::kInvalidArgument, "embedding parallelism must be >= 1");
  }
  if (cfg.max_retries < 0) {
    throw Error(ErrorCode::kInvalidArgument, "embedding max_retries must be >= 0");
  }
  if (cfg.endpoint == kDeterministicEndpoint) {
    if (cfg.dimension == 0) {
      throw Error(ErrorCode::kInvalidArgument, "embedding dimension must be >= 1");
    }
  } else if (cfg.endpoint.find("://") == std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument,
                "embedding endpoint must be a URL or \"deterministic-test\"");
  }
}

// ---------------------------------------------------------------------------
// DeterministicEmbedder

DeterministicEmbedder::DeterministicEmbedder(std::size_t dimension, std::uint64_t seed)
    : dimension_(dimension), seed_(seed) {
  if (dimension_ == 0) {
    throw Error(ErrorCode::kInvalidArgument, "embedding dimension must be >= 1");
  }
}

std::string DeterministicEmbedder::id() const {
  return std::string(kDeterministicEndpoint) + "/" + std::to_string(dimension_) + "/" +
         std::to_string(seed_);
}

std::size_t DeterministicEmbedder::bucket_of(std::string_view token) const {
  return static_cast<std::size_t>(fnv1a(token, seed_) % dimension_);
}

std::vector<EmbeddingVector> DeterministicEmbedder::embed(
    std::span<const std::string> texts) {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    std::vector<double> counts(dimension_, 0.0);
    const TokenSequence tokens = tokenize(text);
    if (tokens.empty()) {
      counts[bucket_of(kEmptyTextToken)] = 1.0;
    }
    for (const auto& tok : tokens.tokens) counts[bucket_of(tok)] += 1.0;
    out.push_back(EmbeddingVector::normalized(std::move(counts)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// HttpEmbedder

HttpEmbedder::HttpEmbedder(EmbeddingProviderConfig cfg) : cfg_(std::move(cfg)) {
  validate(cfg_);
}

std::string HttpEmbedder::id() const { return cfg_.endpoint; }

std::vector<EmbeddingVector> HttpEmbedder::embed(std::span<const std::string> texts) {
  using nlohmann::json;
  json request = {{"model", cfg_.model}, {"input", json::array()}};
  for (const auto& t : texts) request["input"].push_back(t);

  detail::HeaderList headers;
  const std::string key = detail::read_credential(cfg_.credential_env);
  if (!key.empty()) headers.emplace_back("Authorization", "Bearer " + key);

  const auto res = detail::post_json(cfg_.endpoint, headers, request.dump(), cfg_.timeout);
  if (res.status < 200 || res.status >= 300) {
    detail::throw_for_status(res.status, "embedding endpoint " + cfg_.endpoint);
  }

  json body;
  try {
    body = json::parse(res.body);
  } catch (const json::exception& e) {
    throw ProviderError(ErrorCode::kProviderRejected,
                        std::string("embedding response is not JSON: ") + e.what(),
                        res.status, false);
  }

  std::vector<std::vector<double>> rows;
  try {
    if (body.contains("embeddings")) {
      for (const auto& row : body.at("embeddings")) rows.push_back(row.get<std::vector<double>>());
    } else if (body.contains("data")) {
      auto data = body.at("data");
      // OpenAI-style responses carry an explicit index; honor it.
      if (!data.empty() && data.front().contains("index")) {
        std::sort(data.begin(), data.end(), [](const json& a, const json& b) {
          return a.at("index").get<long long>() < b.at("index").get<long long>();
        });
      }
      for (const auto& item : data) rows.push_back(item.at("embedding").get<std::vector<double>>());
    } else {
      throw Error(ErrorCode::kProviderRejected, "no embeddings field");
    }
  } catch (const json::exception& e) {
    throw ProviderError(ErrorCode::kProviderRejected,
                        std::string("malformed embedding response: ") + e.what(), res.status,
                        false);
  }
  if (rows.size() != texts.size()) {
    throw ProviderError(ErrorCode::kProviderRejected,
                        "embedding response has " + std::to_string(rows.size()) +
                            " rows for " + std::to_string(texts.size()) + " texts",
                        res.status, false);
  }

  std::vector<EmbeddingVector> out;
  out.reserve(rows.size());
  for (auto& row : rows) {
    if (!out.empty() && row.size() != out.front().dim()) {
      throw Error(ErrorCode::kDimensionMismatch, "embedding rows differ in dimension");
    }
    out.push_back(EmbeddingVector::normalized(std::move(row)));
  }
  return out;
}

std::unique_ptr<EmbeddingProvider> make_embedding_provider(const EmbeddingProviderConfig& cfg) {
  validate(cfg);
  if (cfg.endpoint == kDeterministicEndpoint) {
    return std::make_unique<DeterministicEmbedder>(cfg.dimension, cfg.seed);
  }
  return std::make_unique<HttpEmbedder>(cfg);
}

// ---------------------------------------------------------------------------
// EmbeddingCache

std::string EmbeddingCache::make_key(std::string_view provider, std::string_view model,
                                     std::string_view text) {
  std::string key;
  key.reserve(provider.size() + model.size() + text.size() + 2);
  key.append(provider).push_back('\0');
  key.append(model).push_back('\0');
  key.append(text);
  return key;
}

bool EmbeddingCache::lookup(const std::string& key, EmbeddingVector& out) const {
  std::shared_lock lock(mutex_);
  const auto it = entries_.find(key);
  if (it == entries_.end()) return false;
  out = it->second;
  return true;
}

void EmbeddingCache::store(const std::string& key, const EmbeddingVector& value) {
  std::unique_lock lock(mutex_);
  entries_.insert_or_assign(key, value);
}

std::size_t EmbeddingCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

// ---------------------------------------------------------------------------
// Embedder

Embedder::Embedder(EmbeddingProviderConfig cfg)
    : cfg_(std::move(cfg)), provider_(make_embedding_provider(cfg_)) {}

Embedder::Embedder(EmbeddingProviderConfig cfg, std::unique_ptr<EmbeddingProvider> provider)
    : cfg_(std::move(cfg)), provider_(std::move(provider)) {
  validate(cfg_);
  if (!provider_) throw Error(ErrorCode::kInvalidArgument, "null embedding provider");
}

std::size_t Embedder::provider_calls() const {
  std::lock_guard lock(stats_mutex_);
  return provider_calls_;
}

std::vector<EmbeddingVector> Embedder::call_with_retry(std::span<const std::string> texts) {
  for (int attempt = 0;; ++attempt) {
    {
      std::lock_guard lock(stats_mutex_);
      ++provider_calls_;
    }
    try {
      return provider_->embed(texts);
    } catch (const ProviderError& e) {
      if (!e.retryable() || attempt >= cfg_.max_retries) throw;
    }
    std::this_thread::sleep_for(cfg_.backoff_base * (1 << attempt));
  }
}

std::vector<EmbeddingVector> Embedder::embed_batch(std::span<const std::string> texts) {
  if (texts.empty()) throw Error(ErrorCode::kEmptyBatch, "embed_batch: empty batch");

  const std::string pid = provider_->id();
  std::vector<std::string> keys;
  keys.reserve(texts.size());
  for (const auto& t : texts) keys.push_back(EmbeddingCache::make_key(pid, cfg_.model, t));

  // Unique misses, in first-appearance order.
  std::vector<std::string> missing;
  {
    std::unordered_map<std::string, bool> seen;
    EmbeddingVector scratch = EmbeddingVector::normalized({1.0});
    for (std::size_t i = 0; i < texts.size(); ++i) {
      if (cache_.lookup(keys[i], scratch)) continue;
      if (seen.emplace(keys[i], true).second) missing.push_back(texts[i]);
    }
  }

  const std::size_t chunks = (missing.size() + cfg_.batch_size - 1) / cfg_.batch_size;
  detail::parallel_for(chunks, cfg_.parallelism, [&](std::size_t c) {
    const std::size_t begin = c * cfg_.batch_size;
    const std::size_t end = std::min(missing.size(), begin + cfg_.batch_size);
    const std::span<const std::string> chunk(missing.data() + begin, end - begin);
    auto vectors = call_with_retry(chunk);
    if (vectors.size() != chunk.size()) {
      throw Error(ErrorCode::kProviderRejected, "provider returned wrong number of vectors");
    }
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      cache_.store(EmbeddingCache::make_key(pid, cfg_.model, chunk[i]), vectors[i]);
    }
  });

  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  EmbeddingVector v = EmbeddingVector::normalized({1.0});
  std::size_t dim = 0;
  for (const auto& key : keys) {
    if (!cache_.lookup(key, v)) {
      throw Error(ErrorCode::kInternal, "embedding missing from cache after fetch");
    }
    if (dim == 0) dim = v.dim();
    if (v.dim() != dim) {
      throw Error(ErrorCode::kDimensionMismatch, "provider returned mixed dimensions");
    }
    out.push_back(v);
  }
  return out;
}

std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts,
                                         const EmbeddingProviderConfig& cfg) {
  Embedder embedder(cfg);
  return embedder.embed_batch(texts);
}

}  // namespace humbr
