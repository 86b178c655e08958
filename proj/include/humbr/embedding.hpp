#pragma once

// Semantic similarity: embedding providers, a shared cache and cosine.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace humbr {

/// Unit-length embedding. Construction normalizes and rejects zero vectors.
class EmbeddingVector {
 public:
  /// Throws Error(kZeroVector) if raw has no nonzero finite component.
  static EmbeddingVector normalized(std::vector<double> raw);

  std::span<const double> values() const { return values_; }
  std::size_t dim() const { return values_.size(); }

 private:
  explicit EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {}
  std::vector<double> values_;
};

/// Dot product of two stored (unit) vectors, clamped to [-1, 1].
double cosine(const EmbeddingVector& u, const EmbeddingVector& v);

inline constexpr std::string_view kDeterministicEndpoint = "deterministic-test";

struct EmbeddingProviderConfig {
  std::string endpoint{kDeterministicEndpoint};  // URL or "deterministic-test"
  std::string model = "hash-bow-v1";
  std::size_t batch_size = 32;
  std::chrono::milliseconds timeout{30000};
  std::string credential_env;  // name of the env var holding the API key
  std::size_t parallelism = 4;
  int max_retries = 2;
  std::chrono::milliseconds backoff_base{200};
  // deterministic-test only
  std::size_t dimension = 1024;
  std::uint64_t seed = 0;
};

/// Throws Error(kInvalidArgument) on batch_size == 0, timeout <= 0, etc.
void validate(const EmbeddingProviderConfig& cfg);

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  /// Stable identity used as part of the cache key.
  virtual std::string id() const = 0;
  /// One round-trip. Returns one vector per text, in order.
  virtual std::vector<EmbeddingVector> embed(std::span<const std::string> texts) = 0;
};

/// Offline bag-of-words embedder. Each token of the tokenized text is hashed
/// (FNV-1a, salted with the seed) into one of `dimension` buckets and the
/// bucket counts are L2-normalized, so texts that share more tokens have a
/// higher cosine. Empty texts map onto a reserved sentinel token.
class DeterministicEmbedder final : public EmbeddingProvider {
 public:
  DeterministicEmbedder(std::size_t dimension, std::uint64_t seed);
  std::string id() const override;
  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override;

  std::size_t bucket_of(std::string_view token) const;

 private:
  std::size_t dimension_;
  std::uint64_t seed_;
};

/// JSON-over-HTTP embedder. Request: {"model": ..., "input": [texts]}.
/// Response: {"embeddings": [[...], ...]} or {"data": [{"embedding": [...]}]}.
/// The bearer token is read from cfg.credential_env at call time.
class HttpEmbedder final : public EmbeddingProvider {
 public:
  explicit HttpEmbedder(EmbeddingProviderConfig cfg);
  std::string id() const override;
  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override;

 private:
  EmbeddingProviderConfig cfg_;
};

std::unique_ptr<EmbeddingProvider> make_embedding_provider(const EmbeddingProviderConfig& cfg);

/// Thread-safe cache keyed by (provider id, model, text).
class EmbeddingCache {
 public:
  bool lookup(const std::string& key, EmbeddingVector& out) const;
  void store(const std::string& key, const EmbeddingVector& value);
  std::size_t size() const;

  static std::string make_key(std::string_view provider, std::string_view model,
                              std::string_view text);

 private:
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, EmbeddingVector> entries_;
};

/// Provider + cache + batching/retry policy. One Embedder is meant to live as
/// long as a run so repeated texts are embedded once.
class Embedder {
 public:
  explicit Embedder(EmbeddingProviderConfig cfg);
  Embedder(EmbeddingProviderConfig cfg, std::unique_ptr<EmbeddingProvider> provider);

  /// One vector per text, in input order. Uncached texts are split into
  /// batch_size chunks issued concurrently (up to cfg.parallelism); each chunk
  /// is retried on provider-unreachable with exponential backoff.
  std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts);

  const EmbeddingProviderConfig& config() const { return cfg_; }
  const EmbeddingCache& cache() const { return cache_; }
  std::size_t provider_calls() const;

 private:
  std::vector<EmbeddingVector> call_with_retry(std::span<const std::string> texts);

  EmbeddingProviderConfig cfg_;
  std::unique_ptr<EmbeddingProvider> provider_;
  EmbeddingCache cache_;
  mutable std::mutex stats_mutex_;
  std::size_t provider_calls_ = 0;
};

/// Convenience: builds a provider from cfg and embeds texts (no shared cache).
std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts,
                                         const EmbeddingProviderConfig& cfg);

}  // namespace humbr
