#include "humbr/config.hpp"

#include <set>

#include "humbr/error.hpp"
#include "humbr/records.hpp"

namespace humbr {
namespace {

using nlohmann::json;

const std::set<std::string> kTopKeys = {
    "preset",      "alpha",     "tau",       "epsilon",           "seed",
    "parallelism", "min_pool",  "trials",    "max_output_tokens", "temperature_ladder",
    "embedding",   "providers", "judge",     "catalog",           "planner"};
const std::set<std::string> kEmbeddingKeys = {
    "endpoint", "model",       "batch_size", "timeout_ms", "credential_env",
    "parallelism", "max_retries", "backoff_ms", "dimension",  "seed"};
const std::set<std::string> kProviderKeys = {
    "id",          "kind",       "endpoint",     "model", "credential_env",
    "timeout_ms",  "max_retries", "backoff_ms", "max_parallel", "stub"};
const std::set<std::string> kStubKeys = {"responses", "failure", "transient_failures"};
const std::set<std::string> kPlannerKeys = {"max_models", "max_samples", "enumeration_ceiling",
                                            "certification"};
const std::set<std::string> kSecretKeys = {"api_key", "apikey", "key", "token", "secret",
                                           "password", "credential", "authorization"};

json provider_defaults() {
  const ProviderSpec d;
  return {{"kind", d.kind},
          {"endpoint", d.endpoint},
          {"model", d.model},
          {"credential_env", d.credential_env},
          {"timeout_ms", d.timeout.count()},
          {"max_retries", d.max_retries},
          {"backoff_ms", d.backoff_base.count()},
          {"max_parallel", d.max_parallel},
          {"stub", {{"responses", json::array()}, {"failure", "none"}, {"transient_failures", 0}}}};
}

ProviderSpec provider_from_json(const json& raw) {
  json j = provider_defaults();
  j.merge_patch(raw);
  ProviderSpec p;
  p.id = j.at("id").get<std::string>();
  p.kind = j.at("kind").get<std::string>();
  p.endpoint = j.at("endpoint").get<std::string>();
  p.model = j.at("model").get<std::string>();
  p.credential_env = j.at("credential_env").get<std::string>();
  p.timeout = std::chrono::milliseconds(j.at("timeout_ms").get<long long>());
  p.max_retries = j.at("max_retries").get<int>();
  p.backoff_base = std::chrono::milliseconds(j.at("backoff_ms").get<long long>());
  p.max_parallel = j.at("max_parallel").get<unsigned>();
  const auto& stub = j.at("stub");
  p.stub.responses = stub.at("responses").get<std::vector<std::string>>();
  p.stub.failure = stub.at("failure").get<std::string>();
  p.stub.transient_failures = stub.at("transient_failures").get<unsigned>();
  validate(p);
  return p;
}

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where,
                std::vector<std::string>& issues) {
  if (!obj.is_object()) {
    issues.push_back(where + ": expected an object");
    return;
  }
  for (const auto& [k, v] : obj.items()) {
    if (kSecretKeys.count(k)) {
      issues.push_back(where + "." + k +
                       ": credentials must not be stored in config; name an env var in "
                       "credential_env instead");
    } else if (!allowed.count(k)) {
      issues.push_back(where + ": unknown key \"" + k + "\"");
    }
  }
}

void check_provider(const json& p, const std::string& where, std::vector<std::string>& issues) {
  check_keys(p, kProviderKeys, where, issues);
  if (p.is_object() && p.contains("stub")) check_keys(p.at("stub"), kStubKeys, where + ".stub", issues);
}

}  // namespace

json default_config_json() {
  const RunConfig d;
  return to_json(d);
}

json preset_json(std::string_view name) {
  if (name == "default") return json::object();
  if (name == "production") return {{"alpha", kProductionAlpha}, {"tau", kDefaultTau}};
  throw Error(ErrorCode::kInvalidArgument, "unknown preset \"" + std::string(name) + "\"");
}

json resolve_config_json(const json& file, const json& overrides) {
  for (const json* layer : {&file, &overrides}) {
    if (!layer->is_null() && !layer->is_object()) {
      throw Error(ErrorCode::kInvalidArgument, "config layers must be JSON objects");
    }
  }
  std::string preset = "default";
  if (file.is_object() && file.contains("preset")) preset = file.at("preset").get<std::string>();
  if (overrides.is_object() && overrides.contains("preset")) {
    preset = overrides.at("preset").get<std::string>();
  }

  json merged = default_config_json();
  merged.merge_patch(preset_json(preset));
  if (file.is_object()) merged.merge_patch(file);
  if (overrides.is_object()) merged.merge_patch(overrides);
  merged["preset"] = preset;
  // Round-trip through the typed form so the result is validated and complete.
  json out = to_json(config_from_json(merged));
  out["preset"] = preset;
  return out;
}

RunConfig config_from_json(const json& raw) {
  json j = default_config_json();
  j.merge_patch(raw);
  RunConfig c;
  try {
    c.alpha = j.at("alpha").get<double>();
    c.tau = j.at("tau").get<double>();
    c.epsilon = j.at("epsilon").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.parallelism = j.at("parallelism").get<std::size_t>();
    if (j.contains("min_pool") && !j.at("min_pool").is_null()) {
      c.min_pool = j.at("min_pool").get<std::size_t>();
    }
    c.trials = j.at("trials").get<std::uint64_t>();
    c.max_output_tokens = j.at("max_output_tokens").get<unsigned>();
    c.temperature_ladder = j.at("temperature_ladder").get<std::vector<double>>();

    const auto& e = j.at("embedding");
    c.embedding.endpoint = e.at("endpoint").get<std::string>();
    c.embedding.model = e.at("model").get<std::string>();
    c.embedding.batch_size = e.at("batch_size").get<std::size_t>();
    c.embedding.timeout = std::chrono::milliseconds(e.at("timeout_ms").get<long long>());
    c.embedding.credential_env = e.at("credential_env").get<std::string>();
    c.embedding.parallelism = e.at("parallelism").get<std::size_t>();
    c.embedding.max_retries = e.at("max_retries").get<int>();
    c.embedding.backoff_base = std::chrono::milliseconds(e.at("backoff_ms").get<long long>());
    c.embedding.dimension = e.at("dimension").get<std::size_t>();
    c.embedding.seed = e.at("seed").get<std::uint64_t>();

    for (const auto& p : j.at("providers")) c.providers.push_back(provider_from_json(p));
    if (j.contains("judge") && !j.at("judge").is_null()) c.judge = provider_from_json(j.at("judge"));
    c.catalog = catalog_from_json(j.at("catalog"));

    const auto& pl = j.at("planner");
    c.limits.max_models = pl.at("max_models").get<unsigned>();
    c.limits.max_samples = pl.at("max_samples").get<unsigned>();
    c.limits.enumeration_ceiling = pl.at("enumeration_ceiling").get<unsigned>();
    const auto cert = pl.at("certification").get<std::string>();
    if (cert == "auto") {
      c.limits.policy = CertificationPolicy::kAuto;
    } else if (cert == "hoeffding") {
      c.limits.policy = CertificationPolicy::kHoeffding;
    } else {
      throw Error(ErrorCode::kInvalidArgument, "planner.certification must be auto or hoeffding");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("config: ") + e.what());
  }

  if (!(c.alpha >= 0.0 && c.alpha <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "alpha must be in [0, 1]");
  if (!(c.tau >= 0.0 && c.tau <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "tau must be in [0, 1]");
  if (!(c.epsilon > 0.0 && c.epsilon < 1.0)) throw Error(ErrorCode::kInvalidArgument, "epsilon must be in (0, 1)");
  if (c.parallelism == 0) throw Error(ErrorCode::kInvalidArgument, "parallelism must be >= 1");
  if (c.limits.max_samples == 0) throw Error(ErrorCode::kInvalidArgument, "planner.max_samples must be >= 1");
  if (c.temperature_ladder.empty()) throw Error(ErrorCode::kInvalidArgument, "temperature_ladder is empty");
  for (std::size_t i = 0; i < c.temperature_ladder.size(); ++i) {
    const double t = c.temperature_ladder[i];
    if (!(t >= 0.0 && t <= 2.0)) throw Error(ErrorCode::kInvalidArgument, "temperatures must be in [0, 2]");
    for (std::size_t j = 0; j < i; ++j) {
      if (c.temperature_ladder[j] == t) {
        throw Error(ErrorCode::kInvalidArgument, "temperature_ladder has a repeated value");
      }
    }
  }
  validate(c.embedding);
  return c;
}

json to_json(const ProviderSpec& p) {
  return {{"id", p.id},
          {"kind", p.kind},
          {"endpoint", p.endpoint},
          {"model", p.model},
          {"credential_env", p.credential_env},
          {"timeout_ms", p.timeout.count()},
          {"max_retries", p.max_retries},
          {"backoff_ms", p.backoff_base.count()},
          {"max_parallel", p.max_parallel},
          {"stub",
           {{"responses", p.stub.responses},
            {"failure", p.stub.failure},
            {"transient_failures", p.stub.transient_failures}}}};
}

json to_json(const RunConfig& c) {
  json providers = json::array();
  for (const auto& p : c.providers) providers.push_back(to_json(p));
  json catalog = json::array();
  for (const auto& e : c.catalog) catalog.push_back(to_json(e));
  return {
      {"alpha", c.alpha},
      {"tau", c.tau},
      {"epsilon", c.epsilon},
      {"seed", c.seed},
      {"parallelism", c.parallelism},
      {"min_pool", c.min_pool ? json(*c.min_pool) : json(nullptr)},
      {"trials", c.trials},
      {"max_output_tokens", c.max_output_tokens},
      {"temperature_ladder", c.temperature_ladder},
      {"embedding",
       {{"endpoint", c.embedding.endpoint},
        {"model", c.embedding.model},
        {"batch_size", c.embedding.batch_size},
        {"timeout_ms", c.embedding.timeout.count()},
        {"credential_env", c.embedding.credential_env},
        {"parallelism", c.embedding.parallelism},
        {"max_retries", c.embedding.max_retries},
        {"backoff_ms", c.embedding.backoff_base.count()},
        {"dimension", c.embedding.dimension},
        {"seed", c.embedding.seed}}},
      {"providers", providers},
      {"judge", c.judge ? to_json(*c.judge) : json(nullptr)},
      {"catalog", catalog},
      {"planner",
       {{"max_models", c.limits.max_models},
        {"max_samples", c.limits.max_samples},
        {"enumeration_ceiling", c.limits.enumeration_ceiling},
        {"certification", c.limits.policy == CertificationPolicy::kAuto ? "auto" : "hoeffding"}}}};
}

std::vector<std::string> config_issues(const json& file) {
  std::vector<std::string> issues;
  if (!file.is_object()) {
    issues.push_back("config must be a JSON object");
    return issues;
  }
  check_keys(file, kTopKeys, "config", issues);
  if (file.contains("embedding")) check_keys(file.at("embedding"), kEmbeddingKeys, "embedding", issues);
  if (file.contains("planner")) check_keys(file.at("planner"), kPlannerKeys, "planner", issues);
  if (file.contains("providers")) {
    if (!file.at("providers").is_array()) {
      issues.push_back("providers: expected an array");
    } else {
      std::size_t i = 0;
      for (const auto& p : file.at("providers")) {
        check_provider(p, "providers[" + std::to_string(i++) + "]", issues);
      }
    }
  }
  if (file.contains("judge") && !file.at("judge").is_null()) check_provider(file.at("judge"), "judge", issues);
  if (!issues.empty()) return issues;
  try {
    (void)resolve_config_json(file, json());
  } catch (const std::exception& e) {
    issues.push_back(e.what());
  }
  return issues;
}

}  // namespace humbr
