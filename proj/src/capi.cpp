#include "humbr/humbr.h"

#include <memory>
#include <new>
#include <string>

#include "humbr/config.hpp"
#include "humbr/consensus.hpp"
#include "humbr/error.hpp"
#include "humbr/orchestrator.hpp"
#include "humbr/planner.hpp"
#include "humbr/records.hpp"
#include "humbr/riskmodel.hpp"
#include "humbr/textsim.hpp"

struct humbr_buffer {
  std::string text;
};

struct humbr_engine {
  explicit humbr_engine(humbr::RunConfig c) : config(std::move(c)), embedder(config.embedding) {}
  humbr::RunConfig config;
  humbr::Embedder embedder;
};

namespace {

using nlohmann::json;

thread_local std::string g_last_error;

humbr_status status_of(humbr::ErrorCode code) {
  using humbr::ErrorCode;
  switch (code) {
    case ErrorCode::kInvalidArgument: return HUMBR_E_INVALID_ARGUMENT;
    case ErrorCode::kPoolTooSmall: return HUMBR_E_POOL_TOO_SMALL;
    case ErrorCode::kMissingEmbedding: return HUMBR_E_MISSING_EMBEDDING;
    case ErrorCode::kDimensionMismatch: return HUMBR_E_DIMENSION_MISMATCH;
    case ErrorCode::kEmptyBatch: return HUMBR_E_EMPTY_BATCH;
    case ErrorCode::kZeroVector: return HUMBR_E_ZERO_VECTOR;
    case ErrorCode::kProviderUnreachable: return HUMBR_E_PROVIDER_UNREACHABLE;
    case ErrorCode::kProviderRejected: return HUMBR_E_PROVIDER_REJECTED;
    case ErrorCode::kInfeasibleThreshold: return HUMBR_E_INFEASIBLE_THRESHOLD;
    case ErrorCode::kCeilingExceeded: return HUMBR_E_CEILING_EXCEEDED;
    case ErrorCode::kAllProvidersFailed: return HUMBR_E_ALL_PROVIDERS_FAILED;
    case ErrorCode::kPoolBelowMinimum: return HUMBR_E_POOL_BELOW_MINIMUM;
    case ErrorCode::kUnparseableJudgeOutput: return HUMBR_E_UNPARSEABLE_JUDGE_OUTPUT;
    case ErrorCode::kOutOfRange: return HUMBR_E_OUT_OF_RANGE;
    case ErrorCode::kParse: return HUMBR_E_PARSE;
    case ErrorCode::kIo: return HUMBR_E_IO;
    case ErrorCode::kInternal: return HUMBR_E_INTERNAL;
  }
  return HUMBR_E_INTERNAL;
}

// Runs fn, translating exceptions into a status plus thread-local message.
template <typename Fn>
humbr_status guarded(Fn&& fn) {
  g_last_error.clear();
  try {
    fn();
    return HUMBR_OK;
  } catch (const humbr::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const json::exception& e) {
    g_last_error = e.what();
    return HUMBR_E_PARSE;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return HUMBR_E_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return HUMBR_E_INTERNAL;
  } catch (...) {
    g_last_error = "unknown exception";
    return HUMBR_E_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw humbr::Error(humbr::ErrorCode::kInvalidArgument, what);
}

json parse_layer(const char* text) {
  if (text == nullptr) return json();
  const std::string_view s(text);
  if (s.find_first_not_of(" \t\r\n") == std::string_view::npos) return json();
  try {
    return json::parse(s);
  } catch (const json::exception& e) {
    throw humbr::Error(humbr::ErrorCode::kParse, std::string("config is not valid JSON: ") + e.what());
  }
}

humbr_buffer* make_buffer(std::string text) { return new humbr_buffer{std::move(text)}; }

humbr::FailureEstimate estimate_from(const json& j, std::uint64_t trials, std::uint64_t seed,
                                     humbr::RiskParameters& params) {
  params = humbr::parse_risk_parameters(j);
  humbr::EstimateOptions opts;
  if (j.contains("rho_bar")) opts.rho_bar = j.at("rho_bar").get<double>();
  if (j.contains("ceiling")) opts.ceiling = j.at("ceiling").get<unsigned>();
  opts.mc_trials = trials;
  opts.seed = seed;
  return humbr::estimate_failure(params, opts);
}

}  // namespace

extern "C" {

const char* humbr_version(void) { return HUMBR_VERSION; }

const char* humbr_status_string(humbr_status status) {
  switch (status) {
    case HUMBR_OK: return "ok";
    case HUMBR_E_INVALID_ARGUMENT: return "invalid-argument";
    case HUMBR_E_POOL_TOO_SMALL: return "pool-too-small";
    case HUMBR_E_MISSING_EMBEDDING: return "missing-embedding";
    case HUMBR_E_DIMENSION_MISMATCH: return "dimension-mismatch";
    case HUMBR_E_EMPTY_BATCH: return "empty-batch";
    case HUMBR_E_ZERO_VECTOR: return "zero-vector-returned";
    case HUMBR_E_PROVIDER_UNREACHABLE: return "provider-unreachable";
    case HUMBR_E_PROVIDER_REJECTED: return "provider-rejected";
    case HUMBR_E_INFEASIBLE_THRESHOLD: return "infeasible-threshold";
    case HUMBR_E_CEILING_EXCEEDED: return "enumeration-ceiling-exceeded";
    case HUMBR_E_ALL_PROVIDERS_FAILED: return "all-providers-failed";
    case HUMBR_E_POOL_BELOW_MINIMUM: return "pool-below-minimum";
    case HUMBR_E_UNPARSEABLE_JUDGE_OUTPUT: return "unparseable-judge-output";
    case HUMBR_E_OUT_OF_RANGE: return "out-of-range";
    case HUMBR_E_PARSE: return "parse-error";
    case HUMBR_E_IO: return "io-error";
    case HUMBR_E_INTERNAL: return "internal-error";
  }
  return "unknown";
}

const char* humbr_last_error(void) { return g_last_error.c_str(); }

const char* humbr_buffer_data(const humbr_buffer* buffer) {
  return buffer ? buffer->text.c_str() : "";
}

size_t humbr_buffer_size(const humbr_buffer* buffer) { return buffer ? buffer->text.size() : 0; }

void humbr_buffer_free(humbr_buffer* buffer) { delete buffer; }

humbr_status humbr_config_resolve(const char* file_json, const char* overrides_json,
                                  humbr_buffer** resolved) {
  return guarded([&] {
    require(resolved != nullptr, "resolved must not be null");
    const json merged = humbr::resolve_config_json(parse_layer(file_json), parse_layer(overrides_json));
    *resolved = make_buffer(merged.dump(2));
  });
}

humbr_status humbr_config_validate(const char* file_json, humbr_buffer** report, int* valid) {
  return guarded([&] {
    require(report != nullptr && valid != nullptr, "output pointers must not be null");
    std::vector<std::string> issues;
    try {
      issues = humbr::config_issues(parse_layer(file_json));
    } catch (const humbr::Error& e) {
      issues.push_back(e.what());
    }
    *valid = issues.empty() ? 1 : 0;
    humbr::ordered_json j = {{"valid", issues.empty()}, {"issues", issues}};
    *report = make_buffer(j.dump());
  });
}

humbr_status humbr_engine_create(const char* config_json, humbr_engine** engine) {
  return guarded([&] {
    require(engine != nullptr, "engine must not be null");
    *engine = nullptr;
    const json merged = humbr::resolve_config_json(parse_layer(config_json), json());
    *engine = new humbr_engine(humbr::config_from_json(merged));
  });
}

void humbr_engine_destroy(humbr_engine* engine) { delete engine; }

humbr_status humbr_engine_select(humbr_engine* engine, const char* pool_jsonl,
                                 humbr_buffer** results, humbr_buffer** diagnostics,
                                 size_t* abstained) {
  return guarded([&] {
    require(engine && pool_jsonl && results && diagnostics && abstained,
            "engine, input and output pointers must not be null");
    const auto& cfg = engine->config;
    auto parsed = humbr::parse_pool_jsonl(pool_jsonl);
    std::string out, diag;
    size_t abstain_count = 0;
    for (const auto& e : parsed.errors) diag += humbr::serialize(e) + "\n";
    for (const auto& pool : parsed.pools) {
      try {
        const auto result =
            humbr::select(pool, cfg.alpha, cfg.tau, engine->embedder, cfg.parallelism);
        if (result.abstained()) ++abstain_count;
        out += humbr::serialize(humbr::make_result_record(pool, result, cfg.alpha, cfg.embedding));
        out += '\n';
      } catch (const humbr::Error& e) {
        diag += humbr::serialize(humbr::LineError{0, pool.prompt_id,
                                                  std::string(humbr::to_string(e.code())) + ": " +
                                                      e.what()}) +
                "\n";
      }
    }
    *results = make_buffer(std::move(out));
    *diagnostics = make_buffer(std::move(diag));
    *abstained = abstain_count;
  });
}

humbr_status humbr_engine_generate(humbr_engine* engine, const char* prompts_jsonl,
                                   humbr_buffer** pools, humbr_buffer** warnings,
                                   size_t* failed_prompts) {
  return guarded([&] {
    require(engine && prompts_jsonl && pools && warnings && failed_prompts,
            "engine, input and output pointers must not be null");
    const auto& cfg = engine->config;
    require(!cfg.providers.empty(), "no providers configured");
    const auto prompts = humbr::parse_prompts_jsonl(prompts_jsonl);

    humbr::GenerationOptions opts;
    opts.parallelism = cfg.parallelism;
    opts.min_pool = cfg.min_pool;
    opts.seed = cfg.seed;

    std::string out, warn;
    size_t failed = 0;
    for (const auto& p : prompts) {
      humbr::GenerationRequest req;
      req.prompt_id = p.prompt_id;
      req.prompt = p.prompt;
      req.default_ladder = cfg.temperature_ladder;
      req.max_output_tokens = cfg.max_output_tokens;
      try {
        const auto outcome = humbr::generate_pool(req, cfg.providers, opts);
        for (const auto& f : outcome.failures) warn += humbr::serialize_warning(p.prompt_id, f) + "\n";
        const humbr::CandidatePool one[] = {outcome.pool};
        out += humbr::serialize_pools(one);
      } catch (const humbr::GenerationError& e) {
        for (const auto& f : e.failures()) warn += humbr::serialize_warning(p.prompt_id, f) + "\n";
        warn += humbr::serialize(humbr::LineError{0, p.prompt_id,
                                                  std::string(humbr::to_string(e.code())) + ": " +
                                                      e.what()}) +
                "\n";
        ++failed;
      }
    }
    if (!prompts.empty() && failed == prompts.size()) {
      *pools = nullptr;
      *warnings = make_buffer(std::move(warn));
      *failed_prompts = failed;
      throw humbr::Error(humbr::ErrorCode::kAllProvidersFailed, "no prompt produced a pool");
    }
    *pools = make_buffer(std::move(out));
    *warnings = make_buffer(std::move(warn));
    *failed_prompts = failed;
  });
}

humbr_status humbr_engine_usc(humbr_engine* engine, const char* pool_jsonl, const char* question,
                              size_t* selected_index) {
  return guarded([&] {
    require(engine && pool_jsonl && question && selected_index,
            "engine, inputs and output pointer must not be null");
    require(engine->config.judge.has_value(), "no judge provider configured");
    auto parsed = humbr::parse_pool_jsonl(pool_jsonl);
    if (!parsed.errors.empty()) {
      throw humbr::Error(humbr::ErrorCode::kParse, humbr::serialize(parsed.errors.front()));
    }
    require(!parsed.pools.empty(), "pool input is empty");
    *selected_index = humbr::usc_select(parsed.pools.front(), question, *engine->config.judge,
                                        engine->config.seed);
  });
}

humbr_status humbr_engine_plan(humbr_engine* engine, humbr_buffer** record, int* feasible) {
  return guarded([&] {
    require(engine && record && feasible, "engine and output pointers must not be null");
    const auto& cfg = engine->config;
    auto limits = cfg.limits;
    limits.parallelism = cfg.parallelism;
    const auto result = humbr::plan(cfg.catalog, cfg.tau, cfg.epsilon, limits);
    *feasible = result.plan ? 1 : 0;
    *record = make_buffer(humbr::serialize_plan(result, cfg.tau, cfg.epsilon) + "\n");
  });
}

humbr_status humbr_engine_pareto(humbr_engine* engine, const double* budgets, size_t budget_count,
                                 humbr_buffer** records) {
  return guarded([&] {
    require(engine && records && (budgets || budget_count == 0),
            "engine and output pointers must not be null");
    const auto& cfg = engine->config;
    auto limits = cfg.limits;
    limits.parallelism = cfg.parallelism;
    const std::vector<double> grid(budgets, budgets + budget_count);
    std::string out;
    for (const auto& p : humbr::pareto_frontier(cfg.catalog, cfg.tau, grid, limits)) {
      out += humbr::serialize_frontier_point(p, cfg.tau) + "\n";
    }
    *records = make_buffer(std::move(out));
  });
}

humbr_status humbr_risk_exact(const char* params_json, humbr_buffer** record) {
  return guarded([&] {
    require(params_json && record, "input and output pointers must not be null");
    humbr::RiskParameters params;
    const auto est = estimate_from(json::parse(params_json), 0, 0, params);
    *record = make_buffer(humbr::serialize_risk(params, est, std::nullopt) + "\n");
  });
}

humbr_status humbr_risk_simulate(const char* params_json, uint64_t trials, uint64_t seed,
                                 humbr_buffer** record) {
  return guarded([&] {
    require(params_json && record, "input and output pointers must not be null");
    require(trials >= 1000, "Monte Carlo needs at least 1000 trials");
    humbr::RiskParameters params;
    const auto est = estimate_from(json::parse(params_json), trials, seed, params);
    *record = make_buffer(humbr::serialize_risk(params, est, seed) + "\n");
  });
}

humbr_status humbr_monitor(const char* results_jsonl, humbr_buffer** record) {
  return guarded([&] {
    require(results_jsonl && record, "input and output pointers must not be null");
    const auto results = humbr::parse_results_jsonl(results_jsonl);
    std::vector<humbr::PoolOutcome> outcomes;
    for (const auto& r : results) outcomes.push_back(humbr::outcome_of(r));
    *record = make_buffer(humbr::serialize(humbr::divergence_report(outcomes)) + "\n");
  });
}

humbr_status humbr_rouge_l(const char* a, const char* b, double* score) {
  return guarded([&] {
    require(a && b && score, "arguments must not be null");
    *score = humbr::rouge_l(humbr::tokenize(a), humbr::tokenize(b));
  });
}

humbr_status humbr_beta_binomial_pmf(unsigned z, unsigned m, double mu, double rho,
                                     double* probability) {
  return guarded([&] {
    require(probability != nullptr, "output pointer must not be null");
    *probability = humbr::beta_binomial_pmf(z, m, mu, rho);
  });
}

humbr_status humbr_failure_probability_exact(unsigned k, unsigned m, double mu, double rho,
                                             double tau, double* probability) {
  return guarded([&] {
    require(probability != nullptr, "output pointer must not be null");
    *probability = humbr::failure_probability_exact(humbr::uniform_parameters(k, m, mu, rho, tau));
  });
}

humbr_status humbr_effective_sample_size(unsigned k, unsigned m, double rho_bar, double* n_eff) {
  return guarded([&] {
    require(n_eff != nullptr, "output pointer must not be null");
    *n_eff = humbr::effective_sample_size(k, m, rho_bar);
  });
}

humbr_status humbr_hoeffding_bound(double n_eff, double tau, double mu_bar, double* bound) {
  return guarded([&] {
    require(bound != nullptr, "output pointer must not be null");
    *bound = humbr::hoeffding_bound(n_eff, tau, mu_bar);
  });
}

humbr_status humbr_required_samples(unsigned k, double tau, double mu_bar, double rho_bar,
                                    double epsilon, unsigned* m, int* feasible) {
  return guarded([&] {
    require(m && feasible, "output pointers must not be null");
    const auto req = humbr::required_samples(k, tau, mu_bar, rho_bar, epsilon);
    *feasible = req.feasible ? 1 : 0;
    *m = req.samples;
  });
}

}  // extern "C"
