#pragma once

// Hybrid-utility minimum Bayes risk selection over a candidate pool.
//
// Every pair of candidates is scored with
//     U(ci, cj) = alpha * max(0, cos(phi(ci), phi(cj))) + (1 - alpha) * ROUGE-L(ci, cj)
// and each candidate's consensus score is its mean utility to the other N-1
// candidates. The candidate with the highest score is returned unless that
// score is below the consensus threshold tau, in which case the pool abstains.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "humbr/embedding.hpp"

namespace humbr {

inline constexpr double kDefaultAlpha = 0.6;
inline constexpr double kProductionAlpha = 0.65;
inline constexpr double kDefaultTau = 0.8;

struct Candidate {
  std::string text;
  std::string model_id;
  double temperature = 0.0;  // [0, 2]
  std::size_t index = 0;     // position in the pool
};

struct CandidatePool {
  std::string prompt_id;
  std::vector<Candidate> candidates;

  std::size_t size() const { return candidates.size(); }
};

/// Throws kInvalidArgument unless N >= 1, indices are 0..N-1 in order and
/// every temperature is in [0, 2].
void validate(const CandidatePool& pool);

/// Builds a pool from texts, assigning indices in order.
CandidatePool make_pool(std::string prompt_id, std::span<const std::string> texts,
                        const std::string& model_id = "model", double temperature = 0.0);

/// Symmetric N x N matrix with a zero diagonal.
class UtilityMatrix {
 public:
  UtilityMatrix(std::size_t n, double alpha);

  std::size_t size() const { return n_; }
  double alpha() const { return alpha_; }
  double at(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }
  /// Sets both (i, j) and (j, i).
  void set_pair(std::size_t i, std::size_t j, double u);

 private:
  std::size_t n_;
  double alpha_;
  std::vector<double> values_;
};

struct ConsensusResult {
  std::optional<std::size_t> selected;  // empty means Abstain
  std::vector<double> scores;
  double threshold = 0.0;
  std::optional<double> winner_score;  // present iff selected

  bool abstained() const { return !selected.has_value(); }
};

/// alpha * max(0, cos) + (1 - alpha) * rouge_l. Both arguments already in [0, 1].
double mix_utility(double alpha, double semantic, double lexical);

/// Hybrid utility of two candidates. `embeddings` is indexed by
/// Candidate::index; a missing entry throws kMissingEmbedding.
double hybrid_utility(const Candidate& ci, const Candidate& cj, double alpha,
                      std::span<const EmbeddingVector> embeddings);

/// Embeds the whole pool in one batch, then fills each unordered pair once.
/// Embedding failures are rethrown with the candidate index range attached.
UtilityMatrix build_utility_matrix(const CandidatePool& pool, double alpha,
                                   Embedder& embedder, std::size_t parallelism = 1);

/// Same, with embeddings supplied by the caller (indexed by candidate).
UtilityMatrix build_utility_matrix(const CandidatePool& pool, double alpha,
                                   std::span<const EmbeddingVector> embeddings,
                                   std::size_t parallelism = 1);

/// Row means over off-diagonal entries. Throws kPoolTooSmall when N < 2.
std::vector<double> consensus_scores(const UtilityMatrix& u);

/// Argmax (lowest index on ties) gated by tau.
ConsensusResult select_from_scores(std::vector<double> scores, double tau);

/// End-to-end selection. Throws kPoolTooSmall for N < 2 and
/// kInvalidArgument for alpha or tau outside [0, 1].
ConsensusResult select(const CandidatePool& pool, double alpha, double tau,
                       Embedder& embedder, std::size_t parallelism = 1);

// ---------------------------------------------------------------------------
// Divergence monitoring

/// Per-pool input to the monitor: which model produced each candidate and the
/// scores/threshold from its ConsensusResult.
struct PoolOutcome {
  std::vector<std::string> model_ids;
  std::vector<double> scores;
  double threshold = 0.0;
};

PoolOutcome outcome_of(const CandidatePool& pool, const ConsensusResult& result);

struct ModelDivergence {
  double mean_divergence = 0.0;      // mean of (1 - S_i)
  std::size_t samples = 0;           // candidates seen
  std::size_t pools = 0;             // pools the model appeared in
  double mu_hat = 0.0;               // fraction with S_i < tau
  std::optional<double> rho_hat;     // within-pool correlation, clamped to [0, 1]
  std::string note;                  // why rho_hat is absent, if it is
};

struct DivergenceReport {
  std::map<std::string, ModelDivergence> models;
};

/// Aggregates per-model divergence. rho_hat is the Pearson correlation of the
/// divergence indicator over all ordered within-pool pairs of the model's
/// samples; it is absent when the model never has two samples in one pool, or
/// when the indicator has no variance. Throws kInvalidArgument on no input or
/// mismatched lengths.
DivergenceReport divergence_report(std::span<const PoolOutcome> outcomes);

}  // namespace humbr
