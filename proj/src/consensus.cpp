#include "humbr/consensus.hpp"

#include <algorithm>
#include <cmath>

#include "humbr/error.hpp"
#include "humbr/textsim.hpp"
#include "parallel.hpp"

namespace humbr {
namespace {

void check_unit(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, std::string(name) + " must be in [0, 1]");
  }
}

void require_pair_capable(std::size_t n) {
  if (n < 2) {
    throw Error(ErrorCode::kPoolTooSmall,
                "consensus needs at least 2 candidates, got " + std::to_string(n));
  }
}

}  // namespace

void validate(const CandidatePool& pool) {
  if (pool.candidates.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "pool " + pool.prompt_id + " is empty");
  }
  for (std::size_t i = 0; i < pool.candidates.size(); ++i) {
    const auto& c = pool.candidates[i];
    if (c.index != i) {
      throw Error(ErrorCode::kInvalidArgument,
                  "pool " + pool.prompt_id + ": candidate at position " + std::to_string(i) +
                      " has index " + std::to_string(c.index));
    }
    if (!(c.temperature >= 0.0 && c.temperature <= 2.0)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "pool " + pool.prompt_id + ": temperature out of [0, 2]");
    }
  }
}

CandidatePool make_pool(std::string prompt_id, std::span<const std::string> texts,
                        const std::string& model_id, double temperature) {
  CandidatePool pool{std::move(prompt_id), {}};
  for (std::size_t i = 0; i < texts.size(); ++i) {
    pool.candidates.push_back({texts[i], model_id, temperature, i});
  }
  return pool;
}

UtilityMatrix::UtilityMatrix(std::size_t n, double alpha)
    : n_(n), alpha_(alpha), values_(n * n, 0.0) {}

void UtilityMatrix::set_pair(std::size_t i, std::size_t j, double u) {
  values_[i * n_ + j] = u;
  values_[j * n_ + i] = u;
}

double mix_utility(double alpha, double semantic, double lexical) {
  const double sem = std::clamp(semantic, 0.0, 1.0);
  const double lex = std::clamp(lexical, 0.0, 1.0);
  // lex + alpha*(sem - lex) keeps sem == lex == 1 exactly at 1.
  return std::clamp(lex + alpha * (sem - lex), 0.0, 1.0);
}

double hybrid_utility(const Candidate& ci, const Candidate& cj, double alpha,
                      std::span<const EmbeddingVector> embeddings) {
  check_unit(alpha, "alpha");
  if (ci.index >= embeddings.size() || cj.index >= embeddings.size()) {
    throw Error(ErrorCode::kMissingEmbedding,
                "no embedding for candidate " +
                    std::to_string(std::max(ci.index, cj.index)));
  }
  // Identical texts share an embedding, so their cosine is 1; computing it
  // would leave rounding noise that splits otherwise exact ties.
  const double sem =
      ci.text == cj.text ? 1.0 : cosine(embeddings[ci.index], embeddings[cj.index]);
  const double lex = rouge_l(tokenize(ci.text), tokenize(cj.text));
  return mix_utility(alpha, sem, lex);
}

UtilityMatrix build_utility_matrix(const CandidatePool& pool, double alpha,
                                   std::span<const EmbeddingVector> embeddings,
                                   std::size_t parallelism) {
  check_unit(alpha, "alpha");
  validate(pool);
  const std::size_t n = pool.size();
  require_pair_capable(n);
  if (embeddings.size() < n) {
    throw Error(ErrorCode::kMissingEmbedding,
                "pool " + pool.prompt_id + ": embeddings for candidates " +
                    std::to_string(embeddings.size()) + ".." + std::to_string(n - 1) +
                    " are missing");
  }

  std::vector<TokenSequence> tokens;
  tokens.reserve(n);
  for (const auto& c : pool.candidates) tokens.push_back(tokenize(c.text));

  UtilityMatrix u(n, alpha);
  // Row i owns pairs (i, j > i), so each unordered pair is written once.
  detail::parallel_for(n, parallelism, [&](std::size_t i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double sem = pool.candidates[i].text == pool.candidates[j].text
                             ? 1.0
                             : cosine(embeddings[i], embeddings[j]);
      const double lex = rouge_l(tokens[i], tokens[j]);
      u.set_pair(i, j, mix_utility(alpha, sem, lex));
    }
  });
  return u;
}

UtilityMatrix build_utility_matrix(const CandidatePool& pool, double alpha,
                                   Embedder& embedder, std::size_t parallelism) {
  check_unit(alpha, "alpha");
  validate(pool);
  require_pair_capable(pool.size());
  std::vector<std::string> texts;
  texts.reserve(pool.size());
  for (const auto& c : pool.candidates) texts.push_back(c.text);

  std::vector<EmbeddingVector> embeddings;
  try {
    embeddings = embedder.embed_batch(texts);
  } catch (const ProviderError& e) {
    throw ProviderError(e.code(),
                        "pool " + pool.prompt_id + " candidates 0.." +
                            std::to_string(pool.size() - 1) + ": " + e.what(),
                        e.http_status(), e.retryable());
  } catch (const Error& e) {
    throw Error(e.code(), "pool " + pool.prompt_id + " candidates 0.." +
                              std::to_string(pool.size() - 1) + ": " + e.what());
  }
  return build_utility_matrix(pool, alpha, embeddings, parallelism);
}

std::vector<double> consensus_scores(const UtilityMatrix& u) {
  const std::size_t n = u.size();
  require_pair_capable(n);
  std::vector<double> scores(n, 0.0);
  std::vector<double> row;
  row.reserve(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    row.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) row.push_back(u.at(i, j));
    }
    // Summing in sorted order makes the score a function of the multiset of
    // utilities, so duplicate candidates tie exactly and the lowest index wins.
    std::sort(row.begin(), row.end());
    double sum = 0.0;
    for (double v : row) sum += v;
    scores[i] = std::clamp(sum / static_cast<double>(n - 1), 0.0, 1.0);
  }
  return scores;
}

ConsensusResult select_from_scores(std::vector<double> scores, double tau) {
  check_unit(tau, "tau");
  require_pair_capable(scores.size());
  ConsensusResult result;
  result.threshold = tau;
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  if (scores[best] >= tau) {
    result.selected = best;
    result.winner_score = scores[best];
  }
  result.scores = std::move(scores);
  return result;
}

ConsensusResult select(const CandidatePool& pool, double alpha, double tau,
                       Embedder& embedder, std::size_t parallelism) {
  check_unit(tau, "tau");
  const UtilityMatrix u = build_utility_matrix(pool, alpha, embedder, parallelism);
  return select_from_scores(consensus_scores(u), tau);
}

// ---------------------------------------------------------------------------

PoolOutcome outcome_of(const CandidatePool& pool, const ConsensusResult& result) {
  PoolOutcome out;
  out.threshold = result.threshold;
  out.scores = result.scores;
  for (const auto& c : pool.candidates) out.model_ids.push_back(c.model_id);
  return out;
}

DivergenceReport divergence_report(std::span<const PoolOutcome> outcomes) {
  if (outcomes.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "divergence_report: no results");
  }

  struct Accum {
    double divergence_sum = 0.0;
    std::size_t samples = 0;
    std::size_t divergent = 0;
    std::size_t pools = 0;
    bool any_multi_sample_pool = false;
    // Ordered within-pool pairs of the 0/1 divergence indicator.
    double pairs = 0, sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  };
  std::map<std::string, Accum> acc;

  for (const auto& o : outcomes) {
    if (o.model_ids.size() != o.scores.size()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "divergence_report: model ids and scores differ in length");
    }
    std::map<std::string, std::vector<int>> indicators;
    for (std::size_t i = 0; i < o.scores.size(); ++i) {
      auto& a = acc[o.model_ids[i]];
      const double s = std::clamp(o.scores[i], 0.0, 1.0);
      a.divergence_sum += 1.0 - s;
      ++a.samples;
      const int diverged = s < o.threshold ? 1 : 0;
      a.divergent += static_cast<std::size_t>(diverged);
      indicators[o.model_ids[i]].push_back(diverged);
    }
    for (const auto& [model, xs] : indicators) {
      auto& a = acc[model];
      ++a.pools;
      if (xs.size() < 2) continue;
      a.any_multi_sample_pool = true;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        for (std::size_t j = 0; j < xs.size(); ++j) {
          if (i == j) continue;
          const double x = xs[i], y = xs[j];
          a.pairs += 1;
          a.sx += x;
          a.sy += y;
          a.sxx += x * x;
          a.syy += y * y;
          a.sxy += x * y;
        }
      }
    }
  }

  DivergenceReport report;
  for (const auto& [model, a] : acc) {
    ModelDivergence d;
    d.samples = a.samples;
    d.pools = a.pools;
    d.mean_divergence = a.divergence_sum / static_cast<double>(a.samples);
    d.mu_hat = static_cast<double>(a.divergent) / static_cast<double>(a.samples);
    if (!a.any_multi_sample_pool) {
      d.note = "fewer than 2 samples per pool";
    } else {
      const double cov = a.sxy / a.pairs - (a.sx / a.pairs) * (a.sy / a.pairs);
      const double vx = a.sxx / a.pairs - (a.sx / a.pairs) * (a.sx / a.pairs);
      const double vy = a.syy / a.pairs - (a.sy / a.pairs) * (a.sy / a.pairs);
      if (vx <= 0.0 || vy <= 0.0) {
        d.note = "divergence indicator is constant";
      } else {
        d.rho_hat = std::clamp(cov / std::sqrt(vx * vy), 0.0, 1.0);
      }
    }
    report.models.emplace(model, std::move(d));
  }
  return report;
}

}  // namespace humbr
