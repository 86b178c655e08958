#include "humbr/records.hpp"

#include <cmath>
#include <map>
#include <set>

#include "humbr/error.hpp"

namespace humbr {
namespace {

using nlohmann::json;

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") != std::string_view::npos) fn(line_no, line);
    if (end == text.size()) break;
    pos = end + 1;
  }
}

json optional_number(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

const json& require(const json& obj, const char* key) {
  if (!obj.contains(key)) throw Error(ErrorCode::kParse, std::string("missing field \"") + key + "\"");
  return obj.at(key);
}

std::string require_string(const json& obj, const char* key) {
  const auto& v = require(obj, key);
  if (!v.is_string()) throw Error(ErrorCode::kParse, std::string("field \"") + key + "\" must be a string");
  return v.get<std::string>();
}

double require_number(const json& obj, const char* key) {
  const auto& v = require(obj, key);
  if (!v.is_number()) throw Error(ErrorCode::kParse, std::string("field \"") + key + "\" must be a number");
  return v.get<double>();
}

ordered_json plan_json(const EnsemblePlan& p) {
  ordered_json assignments = ordered_json::array();
  for (const auto& a : p.assignments) {
    assignments.push_back({{"model_id", a.model_id}, {"temperature", a.temperature}});
  }
  return {{"models", p.models},
          {"k", p.models.size()},
          {"m", p.samples_per_model},
          {"n", p.total_samples()},
          {"cost", p.cost},
          {"p_fail", p.p_fail},
          {"certified_by", to_string(p.certified_by)},
          {"assignments", assignments}};
}

}  // namespace

std::string serialize(const LineError& e) {
  ordered_json j = {{"kind", "error"},
                    {"line", e.line == 0 ? json(nullptr) : json(e.line)},
                    {"prompt_id", e.prompt_id.empty() ? json(nullptr) : json(e.prompt_id)},
                    {"message", e.message}};
  return j.dump();
}

// ---- pools ------------------------------------------------------------------

PoolParse parse_pool_jsonl(std::string_view text) {
  PoolParse out;
  std::map<std::string, std::size_t> index_of;
  std::set<std::string> tainted;

  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    std::string prompt_id;
    try {
      const json j = json::parse(line);
      if (!j.is_object()) throw Error(ErrorCode::kParse, "record must be a JSON object");
      if (j.contains("prompt_id") && j.at("prompt_id").is_string()) {
        prompt_id = j.at("prompt_id").get<std::string>();
      }
      prompt_id = require_string(j, "prompt_id");
      Candidate c;
      c.text = require_string(j, "text");
      c.model_id = require_string(j, "model_id");
      c.temperature = require_number(j, "temperature");
      if (!(c.temperature >= 0.0 && c.temperature <= 2.0)) {
        throw Error(ErrorCode::kParse, "temperature must be in [0, 2]");
      }
      auto [it, inserted] = index_of.emplace(prompt_id, out.pools.size());
      if (inserted) out.pools.push_back({prompt_id, {}});
      auto& pool = out.pools[it->second];
      c.index = pool.candidates.size();
      pool.candidates.push_back(std::move(c));
    } catch (const json::exception& e) {
      out.errors.push_back({line_no, prompt_id, std::string("invalid JSON: ") + e.what()});
      if (!prompt_id.empty()) tainted.insert(prompt_id);
    } catch (const Error& e) {
      out.errors.push_back({line_no, prompt_id, e.what()});
      if (!prompt_id.empty()) tainted.insert(prompt_id);
    }
  });

  if (!tainted.empty()) {
    std::erase_if(out.pools, [&](const CandidatePool& p) { return tainted.count(p.prompt_id) > 0; });
  }
  return out;
}

std::string serialize_candidate(const std::string& prompt_id, const Candidate& c) {
  ordered_json j = {{"prompt_id", prompt_id},
                    {"text", c.text},
                    {"model_id", c.model_id},
                    {"temperature", c.temperature}};
  return j.dump();
}

std::string serialize_pools(std::span<const CandidatePool> pools) {
  std::string out;
  for (const auto& pool : pools) {
    for (const auto& c : pool.candidates) {
      out += serialize_candidate(pool.prompt_id, c);
      out += '\n';
    }
  }
  return out;
}

// ---- prompts ----------------------------------------------------------------

std::vector<PromptRecord> parse_prompts_jsonl(std::string_view text) {
  std::vector<PromptRecord> out;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    try {
      const json j = json::parse(line);
      if (!j.is_object()) throw Error(ErrorCode::kParse, "record must be a JSON object");
      out.push_back({require_string(j, "prompt_id"), require_string(j, "prompt")});
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": " + e.what());
    }
  });
  return out;
}

// ---- results ----------------------------------------------------------------

ResultRecord make_result_record(const CandidatePool& pool, const ConsensusResult& result,
                                double alpha, const EmbeddingProviderConfig& embedding) {
  ResultRecord r;
  r.prompt_id = pool.prompt_id;
  r.result = result;
  if (result.selected) r.selected_text = pool.candidates.at(*result.selected).text;
  for (const auto& c : pool.candidates) {
    r.model_ids.push_back(c.model_id);
    r.temperatures.push_back(c.temperature);
  }
  r.alpha = alpha;
  r.embedding_endpoint = embedding.endpoint;
  r.embedding_model = embedding.model;
  return r;
}

std::string serialize(const ResultRecord& r) {
  ordered_json candidates = ordered_json::array();
  for (std::size_t i = 0; i < r.model_ids.size(); ++i) {
    candidates.push_back({{"model_id", r.model_ids[i]}, {"temperature", r.temperatures[i]}});
  }
  const auto& res = r.result;
  ordered_json j = {
      {"prompt_id", r.prompt_id},
      {"verdict", res.abstained() ? "abstain" : "selected"},
      {"selected_index", res.selected ? json(*res.selected) : json(nullptr)},
      {"selected_text", r.selected_text ? json(*r.selected_text) : json(nullptr)},
      {"winner_score", optional_number(res.winner_score)},
      {"scores", res.scores},
      {"n", res.scores.size()},
      {"candidates", candidates},
      {"config",
       {{"alpha", r.alpha},
        {"tau", res.threshold},
        {"embedding_endpoint", r.embedding_endpoint},
        {"embedding_model", r.embedding_model}}}};
  return j.dump();
}

ResultRecord parse_result(std::string_view line) {
  const json j = json::parse(line);
  if (!j.is_object()) throw Error(ErrorCode::kParse, "result must be a JSON object");
  ResultRecord r;
  r.prompt_id = require_string(j, "prompt_id");
  const std::string verdict = require_string(j, "verdict");
  if (verdict != "selected" && verdict != "abstain") {
    throw Error(ErrorCode::kParse, "verdict must be \"selected\" or \"abstain\"");
  }
  r.result.scores = require(j, "scores").get<std::vector<double>>();
  const auto& cfg = require(j, "config");
  r.result.threshold = require_number(cfg, "tau");
  r.alpha = require_number(cfg, "alpha");
  r.embedding_endpoint = require_string(cfg, "embedding_endpoint");
  r.embedding_model = require_string(cfg, "embedding_model");
  if (verdict == "selected") {
    r.result.selected = require(j, "selected_index").get<std::size_t>();
    r.result.winner_score = require_number(j, "winner_score");
    r.selected_text = require_string(j, "selected_text");
    if (*r.result.selected >= r.result.scores.size()) {
      throw Error(ErrorCode::kParse, "selected_index out of range");
    }
  }
  for (const auto& c : require(j, "candidates")) {
    r.model_ids.push_back(require_string(c, "model_id"));
    r.temperatures.push_back(require_number(c, "temperature"));
  }
  if (r.model_ids.size() != r.result.scores.size()) {
    throw Error(ErrorCode::kParse, "candidates and scores differ in length");
  }
  return r;
}

std::vector<ResultRecord> parse_results_jsonl(std::string_view text) {
  std::vector<ResultRecord> out;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    try {
      out.push_back(parse_result(line));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": " + e.what());
    }
  });
  return out;
}

PoolOutcome outcome_of(const ResultRecord& r) {
  return PoolOutcome{r.model_ids, r.result.scores, r.result.threshold};
}

std::string serialize_warning(const std::string& prompt_id, const CallFailure& f) {
  ordered_json j = {{"kind", "warning"},
                    {"prompt_id", prompt_id},
                    {"provider_id", f.provider_id},
                    {"temperature", f.temperature},
                    {"error", to_string(f.code)},
                    {"http_status", f.http_status},
                    {"attempts", f.attempts},
                    {"message", f.message}};
  return j.dump();
}

// ---- risk -------------------------------------------------------------------

RiskParameters parse_risk_parameters(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kParse, "risk parameters must be a JSON object");
  try {
    RiskParameters p;
    p.tau = j.value("tau", 0.7);
    p.epsilon = j.value("epsilon", 1e-4);
    if (j.contains("profiles")) {
      for (const auto& item : j.at("profiles")) {
        p.profiles.push_back({require_number(item, "mu"), item.value("rho", 0.0),
                              require(item, "m").get<unsigned>()});
      }
    } else {
      const auto k = require(j, "k").get<unsigned>();
      const auto m = require(j, "m").get<unsigned>();
      p.profiles.assign(k, {require_number(j, "mu"), j.value("rho", 0.0), m});
    }
    validate(p);
    return p;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("risk parameters: ") + e.what());
  }
}

std::string serialize_risk(const RiskParameters& params, const FailureEstimate& est,
                           std::optional<std::uint64_t> seed) {
  ordered_json profiles = ordered_json::array();
  for (const auto& p : params.profiles) {
    profiles.push_back({{"mu", p.mu}, {"rho", p.rho}, {"m", p.samples}});
  }
  ordered_json mc = nullptr;
  if (est.monte_carlo) {
    mc = {{"estimate", est.monte_carlo->estimate},
          {"standard_error", est.monte_carlo->standard_error},
          {"failures", est.monte_carlo->failures},
          {"trials", est.monte_carlo->trials},
          {"seed", seed ? json(*seed) : json(nullptr)}};
  }
  ordered_json j = {
      {"kind", "risk"},
      {"k", params.profiles.size()},
      {"n", est.total_samples},
      {"tau", params.tau},
      {"epsilon", params.epsilon},
      {"failure_count", failure_threshold_count(params.tau, est.total_samples)},
      {"profiles", profiles},
      {"mu_bar", est.mu_bar},
      {"rho_bar", est.rho_bar},
      {"n_eff", est.effective_samples},
      {"exact", optional_number(est.exact)},
      {"log10_exact", est.exact && *est.exact > 0 ? json(std::log10(*est.exact)) : json(nullptr)},
      {"hoeffding", optional_number(est.hoeffding)},
      {"monte_carlo", mc}};
  return j.dump();
}

// ---- planning ---------------------------------------------------------------

std::vector<ModelCatalogEntry> catalog_from_json(const json& j) {
  if (!j.is_array()) throw Error(ErrorCode::kParse, "catalog must be a JSON array");
  std::vector<ModelCatalogEntry> out;
  for (const auto& item : j) {
    try {
      ModelCatalogEntry e;
      e.model_id = require_string(item, "model_id");
      e.cost = item.value("cost", 1.0);
      e.mu = require_number(item, "mu");
      e.rho = item.value("rho", 0.0);
      if (item.contains("temperature_ladder")) {
        e.temperature_ladder = item.at("temperature_ladder").get<std::vector<double>>();
      }
      validate(e);
      out.push_back(std::move(e));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParse, std::string("catalog entry: ") + e.what());
    }
  }
  return out;
}

std::vector<ModelCatalogEntry> parse_catalog(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && text[first] == '[') {
    try {
      return catalog_from_json(json::parse(text));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParse, std::string("catalog: ") + e.what());
    }
  }
  json arr = json::array();
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    try {
      arr.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParse, "catalog line " + std::to_string(line_no) + ": " + e.what());
    }
  });
  return catalog_from_json(arr);
}

json to_json(const ModelCatalogEntry& e) {
  return {{"model_id", e.model_id},
          {"cost", e.cost},
          {"mu", e.mu},
          {"rho", e.rho},
          {"temperature_ladder", e.temperature_ladder}};
}

std::string serialize_plan(const PlanResult& result, double tau, double epsilon) {
  ordered_json j = {{"kind", "plan"}, {"feasible", result.plan.has_value()}, {"tau", tau},
                    {"epsilon", epsilon}};
  if (result.plan) {
    const ordered_json body = plan_json(*result.plan);
    for (const auto& [k, v] : body.items()) j[k] = v;
  } else {
    j["reason"] = result.diagnostic;
    j["best_p_fail"] = result.best_p_fail;
  }
  return j.dump();
}

std::string serialize_frontier_point(const FrontierPoint& p, double tau) {
  ordered_json j = {{"kind", "frontier"}, {"budget", p.budget}, {"tau", tau}, {"p_fail", p.p_fail}};
  j["plan"] = p.plan ? plan_json(*p.plan) : ordered_json(nullptr);
  return j.dump();
}

// ---- monitoring -------------------------------------------------------------

std::string serialize(const DivergenceReport& report) {
  ordered_json models = ordered_json::object();
  for (const auto& [id, d] : report.models) {
    models[id] = {{"mean_divergence", d.mean_divergence},
                  {"samples", d.samples},
                  {"pools", d.pools},
                  {"mu_hat", d.mu_hat},
                  {"rho_hat", optional_number(d.rho_hat)},
                  {"note", d.note.empty() ? json(nullptr) : json(d.note)}};
  }
  ordered_json j = {{"kind", "divergence"}, {"models", models}};
  return j.dump();
}

}  // namespace humbr
