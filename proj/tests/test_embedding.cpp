#include <atomic>
#include <thread>

#include "doctest.h"
#include "humbr/embedding.hpp"
#include "humbr/error.hpp"
#include "oracles.hpp"

using namespace humbr;

namespace {

bool throws_code(ErrorCode code, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code() == code;
  }
  return false;
}

std::vector<std::string> texts(std::initializer_list<const char*> xs) {
  return {xs.begin(), xs.end()};
}

// Counts calls and can fail the first few with a retryable error.
class ScriptedProvider final : public EmbeddingProvider {
 public:
  explicit ScriptedProvider(int fail_first = 0, ErrorCode code = ErrorCode::kProviderUnreachable)
      : fail_first_(fail_first), code_(code) {}
  std::string id() const override { return "scripted"; }
  std::vector<EmbeddingVector> embed(std::span<const std::string> batch) override {
    const int call = calls.fetch_add(1);
    max_batch = std::max<std::size_t>(max_batch, batch.size());
    if (call < fail_first_) {
      const bool retryable = code_ == ErrorCode::kProviderUnreachable;
      throw ProviderError(code_, "scripted failure", retryable ? 503 : 401, retryable);
    }
    return inner_.embed(batch);
  }
  std::atomic<int> calls{0};
  std::size_t max_batch = 0;

 private:
  int fail_first_;
  ErrorCode code_;
  DeterministicEmbedder inner_{64, 0};
};

EmbeddingProviderConfig fast_config() {
  EmbeddingProviderConfig cfg;
  cfg.backoff_base = std::chrono::milliseconds(1);
  return cfg;
}

}  // namespace

TEST_CASE("EmbeddingVector: normalization") {
  const auto v = EmbeddingVector::normalized({3.0, 4.0});
  CHECK(v.values()[0] == doctest::Approx(0.6));
  CHECK(v.values()[1] == doctest::Approx(0.8));
  const auto again = EmbeddingVector::normalized({v.values().begin(), v.values().end()});
  for (std::size_t i = 0; i < v.dim(); ++i) CHECK(std::abs(again.values()[i] - v.values()[i]) <= 1e-9);
  CHECK(throws_code(ErrorCode::kZeroVector, [] { EmbeddingVector::normalized({0.0, 0.0}); }));
  CHECK(throws_code(ErrorCode::kZeroVector, [] { EmbeddingVector::normalized({}); }));
  CHECK(throws_code(ErrorCode::kZeroVector, [] { EmbeddingVector::normalized({1.0, NAN}); }));
}

TEST_CASE("cosine: examples and dimension check") {
  const auto u = EmbeddingVector::normalized({1.0, 2.0, 3.0});
  const auto neg = EmbeddingVector::normalized({-1.0, -2.0, -3.0});
  const auto e1 = EmbeddingVector::normalized({1.0, 0.0});
  const auto e2 = EmbeddingVector::normalized({0.0, 1.0});
  CHECK(cosine(u, u) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cosine(e1, e2) == 0.0);
  CHECK(cosine(u, neg) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(throws_code(ErrorCode::kDimensionMismatch, [&] { cosine(u, e1); }));
}

TEST_CASE("deterministic embedder: determinism, identity and unit norm") {
  DeterministicEmbedder emb(1024, 0);
  const auto a = emb.embed(texts({"x"}));
  const auto b = emb.embed(texts({"x"}));
  CHECK(std::equal(a[0].values().begin(), a[0].values().end(), b[0].values().begin()));
  const auto pair = emb.embed(texts({"the same text", "the same text"}));
  CHECK(cosine(pair[0], pair[1]) == doctest::Approx(1.0).epsilon(1e-12));
  for (const auto& v : emb.embed(texts({"", "a b c", "Ünïcode text"}))) {
    double n = 0;
    for (double x : v.values()) n += x * x;
    CHECK(std::abs(std::sqrt(n) - 1.0) <= 1e-6);
  }
}

TEST_CASE("deterministic embedder: matches the bag-of-words definition") {
  DeterministicEmbedder emb(1024, 0);
  const std::vector<std::pair<std::string, std::string>> pairs = {
      {"the cat sat on the mat", "the cat ran"},
      {"alpha beta", "gamma delta"},
      {"", ""},
      {"", "word"},
      {"repeat repeat repeat", "repeat once"}};
  for (const auto& [x, y] : pairs) {
    const std::vector<std::string> batch = {x, y};
    const auto v = emb.embed(batch);
    CHECK(cosine(v[0], v[1]) == doctest::Approx(oracle::bag_cosine(x, y)).epsilon(1e-12));
  }
}

TEST_CASE("deterministic embedder: seed changes buckets") {
  DeterministicEmbedder a(1024, 0), b(1024, 99);
  CHECK(a.id() != b.id());
  int moved = 0;
  for (const char* tok : {"one", "two", "three", "four", "five"}) moved += a.bucket_of(tok) != b.bucket_of(tok);
  CHECK(moved > 0);
}

TEST_CASE("deterministic embedder: cosine non-decreasing in overlap") {
  DeterministicEmbedder emb(4096, 0);
  // fixed-length 6-token texts sharing 0..6 tokens with the base
  const std::vector<std::string> base = {"t0", "t1", "t2", "t3", "t4", "t5"};
  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (const auto& t : v) s += (s.empty() ? "" : " ") + t;
    return s;
  };
  std::vector<std::string> batch = {join(base)};
  for (int shared = 0; shared <= 6; ++shared) {
    std::vector<std::string> t = base;
    for (int i = shared; i < 6; ++i) t[i] = "other" + std::to_string(i);
    batch.push_back(join(t));
  }
  const auto v = emb.embed(batch);
  double prev = -1.0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    const double c = cosine(v[0], v[i]);
    CHECK(c >= prev - 1e-12);
    prev = c;
  }
  CHECK(prev == doctest::Approx(1.0));
}

TEST_CASE("config validation") {
  EmbeddingProviderConfig cfg;
  CHECK_NOTHROW(validate(cfg));
  cfg.batch_size = 0;
  CHECK(throws_code(ErrorCode::kInvalidArgument, [&] { validate(cfg); }));
  cfg = {};
  cfg.timeout = std::chrono::milliseconds(0);
  CHECK(throws_code(ErrorCode::kInvalidArgument, [&] { validate(cfg); }));
  cfg = {};
  cfg.endpoint = "not a url";
  CHECK(throws_code(ErrorCode::kInvalidArgument, [&] { validate(cfg); }));
}

TEST_CASE("embed_batch: empty input is an error") {
  CHECK(throws_code(ErrorCode::kEmptyBatch, [] { embed_batch({}, EmbeddingProviderConfig{}); }));
  Embedder e(EmbeddingProviderConfig{});
  CHECK(throws_code(ErrorCode::kEmptyBatch, [&] { e.embed_batch({}); }));
}

TEST_CASE("Embedder: caches, dedupes and batches") {
  auto cfg = fast_config();
  cfg.batch_size = 3;
  auto provider = std::make_unique<ScriptedProvider>();
  auto* raw = provider.get();
  Embedder e(cfg, std::move(provider));
  const auto batch = texts({"a", "b", "a", "c", "d", "e", "b"});
  const auto first = e.embed_batch(batch);
  REQUIRE(first.size() == batch.size());
  CHECK(e.cache().size() == 5);
  CHECK(raw->max_batch <= 3);
  const int calls = raw->calls.load();
  CHECK(calls == 2);  // 5 distinct texts in chunks of 3
  const auto second = e.embed_batch(batch);
  CHECK(raw->calls.load() == calls);
  CHECK(cosine(first[0], first[2]) == doctest::Approx(1.0));
  CHECK(cosine(first[0], second[0]) == doctest::Approx(1.0));
}

TEST_CASE("Embedder: retries retryable failures only") {
  {
    auto provider = std::make_unique<ScriptedProvider>(2);
    auto* raw = provider.get();
    Embedder e(fast_config(), std::move(provider));
    CHECK(e.embed_batch(texts({"x"})).size() == 1);
    CHECK(raw->calls.load() == 3);
  }
  {
    auto provider = std::make_unique<ScriptedProvider>(5);
    Embedder e(fast_config(), std::move(provider));
    CHECK(throws_code(ErrorCode::kProviderUnreachable, [&] { e.embed_batch(texts({"x"})); }));
  }
  {
    auto provider = std::make_unique<ScriptedProvider>(1, ErrorCode::kProviderRejected);
    auto* raw = provider.get();
    Embedder e(fast_config(), std::move(provider));
    try {
      e.embed_batch(texts({"x"}));
      FAIL("expected provider-rejected");
    } catch (const ProviderError& err) {
      CHECK(err.code() == ErrorCode::kProviderRejected);
      CHECK(err.http_status() == 401);
    }
    CHECK(raw->calls.load() == 1);
  }
}

TEST_CASE("EmbeddingCache: concurrent readers and writers") {
  EmbeddingCache cache;
  const auto v = EmbeddingVector::normalized({1.0, 1.0});
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 500; ++i) {
        const auto key = EmbeddingCache::make_key("p", "m", std::to_string((i * 7 + t) % 100));
        cache.store(key, v);
        EmbeddingVector out = v;
        cache.lookup(key, out);
      }
    });
  }
  for (auto& th : threads) th.join();
  CHECK(cache.size() == 100);
  CHECK(EmbeddingCache::make_key("a", "b", "c") != EmbeddingCache::make_key("a", "bc", ""));
}
