#pragma once

// Line-delimited JSON records: pools, results, plans, frontier points, risk
// estimates and divergence reports. Writers emit a fixed key order and
// nlohmann's shortest round-trip number format, so canonical files survive
// parse -> serialize byte for byte. Schemas are documented in docs/records.md.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "humbr/consensus.hpp"
#include "humbr/orchestrator.hpp"
#include "humbr/planner.hpp"
#include "humbr/riskmodel.hpp"
#include "json.hpp"

namespace humbr {

using ordered_json = nlohmann::ordered_json;

struct LineError {
  std::size_t line = 0;   // 1-based; 0 when not tied to a line
  std::string prompt_id;  // empty when the line did not say
  std::string message;
};

std::string serialize(const LineError& e);

// ---- pools ----------------------------------------------------------------

struct PoolParse {
  std::vector<CandidatePool> pools;  // grouped by prompt_id, first-seen order
  std::vector<LineError> errors;     // pools named here were dropped
};

/// One candidate per line: {"prompt_id","text","model_id","temperature"}.
/// Blank lines are ignored. A malformed line drops its whole pool when the
/// prompt_id is recoverable.
PoolParse parse_pool_jsonl(std::string_view text);

std::string serialize_candidate(const std::string& prompt_id, const Candidate& c);
std::string serialize_pools(std::span<const CandidatePool> pools);

// ---- prompts --------------------------------------------------------------

struct PromptRecord {
  std::string prompt_id;
  std::string prompt;
};

/// {"prompt_id","prompt"} per line. Throws Error(kParse) naming the line.
std::vector<PromptRecord> parse_prompts_jsonl(std::string_view text);

// ---- results --------------------------------------------------------------

struct ResultRecord {
  std::string prompt_id;
  ConsensusResult result;
  std::optional<std::string> selected_text;
  std::vector<std::string> model_ids;
  std::vector<double> temperatures;
  double alpha = kDefaultAlpha;
  std::string embedding_endpoint;
  std::string embedding_model;
};

ResultRecord make_result_record(const CandidatePool& pool, const ConsensusResult& result,
                                double alpha, const EmbeddingProviderConfig& embedding);
std::string serialize(const ResultRecord& r);
ResultRecord parse_result(std::string_view line);
/// Throws Error(kParse) naming the offending line.
std::vector<ResultRecord> parse_results_jsonl(std::string_view text);
PoolOutcome outcome_of(const ResultRecord& r);

// ---- generation warnings --------------------------------------------------

std::string serialize_warning(const std::string& prompt_id, const CallFailure& f);

// ---- risk -----------------------------------------------------------------

/// {"tau", "epsilon", "profiles": [{"mu","rho","m"}]} or the uniform shorthand
/// {"k","m","mu","rho","tau","epsilon"}.
RiskParameters parse_risk_parameters(const nlohmann::json& j);
std::string serialize_risk(const RiskParameters& params, const FailureEstimate& est,
                           std::optional<std::uint64_t> seed);

// ---- planning ---------------------------------------------------------------

/// JSON array of entries, or one entry object per line.
std::vector<ModelCatalogEntry> parse_catalog(std::string_view text);
std::vector<ModelCatalogEntry> catalog_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ModelCatalogEntry& e);

std::string serialize_plan(const PlanResult& result, double tau, double epsilon);
std::string serialize_frontier_point(const FrontierPoint& p, double tau);

// ---- monitoring -------------------------------------------------------------

std::string serialize(const DivergenceReport& report);

}  // namespace humbr
