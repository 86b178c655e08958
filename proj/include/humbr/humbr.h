/*
 * humbr.h - C interface to the HUMBR consensus engine.
 *
 * Everything crosses this boundary as plain numbers or UTF-8 JSON / JSON-lines
 * text. Functions return a humbr_status; on failure humbr_last_error() holds a
 * message for the calling thread until its next call into the library.
 *
 * Output text is returned in humbr_buffer objects owned by the caller and
 * released with humbr_buffer_free(). Engines are opaque handles created from a
 * resolved configuration (see humbr_config_resolve) and released with
 * humbr_engine_destroy(). An engine keeps an embedding cache across calls and
 * may be used from one thread at a time.
 */
#ifndef HUMBR_HUMBR_H
#define HUMBR_HUMBR_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(HUMBR_BUILDING_LIBRARY)
#    define HUMBR_API __declspec(dllexport)
#  else
#    define HUMBR_API __declspec(dllimport)
#  endif
#else
#  define HUMBR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum humbr_status {
  HUMBR_OK = 0,
  HUMBR_E_INVALID_ARGUMENT = 1,
  HUMBR_E_POOL_TOO_SMALL = 2,
  HUMBR_E_MISSING_EMBEDDING = 3,
  HUMBR_E_DIMENSION_MISMATCH = 4,
  HUMBR_E_EMPTY_BATCH = 5,
  HUMBR_E_ZERO_VECTOR = 6,
  HUMBR_E_PROVIDER_UNREACHABLE = 7,
  HUMBR_E_PROVIDER_REJECTED = 8,
  HUMBR_E_INFEASIBLE_THRESHOLD = 9,
  HUMBR_E_CEILING_EXCEEDED = 10,
  HUMBR_E_ALL_PROVIDERS_FAILED = 11,
  HUMBR_E_POOL_BELOW_MINIMUM = 12,
  HUMBR_E_UNPARSEABLE_JUDGE_OUTPUT = 13,
  HUMBR_E_OUT_OF_RANGE = 14,
  HUMBR_E_PARSE = 15,
  HUMBR_E_IO = 16,
  HUMBR_E_INTERNAL = 17
} humbr_status;

typedef struct humbr_engine humbr_engine;
typedef struct humbr_buffer humbr_buffer;

HUMBR_API const char* humbr_version(void);
HUMBR_API const char* humbr_status_string(humbr_status status);
HUMBR_API const char* humbr_last_error(void);

HUMBR_API const char* humbr_buffer_data(const humbr_buffer* buffer);
HUMBR_API size_t humbr_buffer_size(const humbr_buffer* buffer);
HUMBR_API void humbr_buffer_free(humbr_buffer* buffer);

/* ---- configuration ------------------------------------------------------ */

/* Merges defaults < preset < file < overrides. Either input may be NULL or
 * empty. Writes the fully resolved configuration as a JSON object. */
HUMBR_API humbr_status humbr_config_resolve(const char* file_json, const char* overrides_json,
                                            humbr_buffer** resolved);

/* Checks a config file layer. *valid is 1 when no issues were found; the
 * report is a JSON object {"valid": bool, "issues": [...]}. */
HUMBR_API humbr_status humbr_config_validate(const char* file_json, humbr_buffer** report,
                                             int* valid);

/* ---- engine ------------------------------------------------------------- */

HUMBR_API humbr_status humbr_engine_create(const char* config_json, humbr_engine** engine);
HUMBR_API void humbr_engine_destroy(humbr_engine* engine);

/* Runs consensus selection for every pool in a pool JSON-lines document.
 * results: one result record per pool that was scored.
 * diagnostics: one error record per malformed line or failed pool.
 * abstained: number of pools whose verdict is "abstain". */
HUMBR_API humbr_status humbr_engine_select(humbr_engine* engine, const char* pool_jsonl,
                                           humbr_buffer** results, humbr_buffer** diagnostics,
                                           size_t* abstained);

/* Generates one pool per prompt record ({"prompt_id","prompt"} lines) using
 * the configured providers. pools is in the format humbr_engine_select reads;
 * warnings holds one record per failed completion and one error record per
 * abandoned prompt; failed_prompts counts the latter. */
HUMBR_API humbr_status humbr_engine_generate(humbr_engine* engine, const char* prompts_jsonl,
                                             humbr_buffer** pools, humbr_buffer** warnings,
                                             size_t* failed_prompts);

/* Universal Self-Consistency baseline over the first pool in pool_jsonl,
 * judged by the configured judge provider. */
HUMBR_API humbr_status humbr_engine_usc(humbr_engine* engine, const char* pool_jsonl,
                                        const char* question, size_t* selected_index);

/* Cost-minimal ensemble for the configured catalog, tau and epsilon.
 * *feasible is 0 when no configuration within limits meets epsilon (the
 * record then names the binding constraint). */
HUMBR_API humbr_status humbr_engine_plan(humbr_engine* engine, humbr_buffer** record,
                                         int* feasible);

/* One frontier record per budget. */
HUMBR_API humbr_status humbr_engine_pareto(humbr_engine* engine, const double* budgets,
                                           size_t budget_count, humbr_buffer** records);

/* ---- risk and monitoring ------------------------------------------------ */

/* params_json: {"k","m","mu","rho","tau","epsilon"} or
 * {"profiles":[{"mu","rho","m"}],"tau","epsilon"}; optional "ceiling" and
 * "rho_bar". Writes a risk record with exact and Hoeffding values. */
HUMBR_API humbr_status humbr_risk_exact(const char* params_json, humbr_buffer** record);

/* As humbr_risk_exact, plus a seeded Monte Carlo estimate. */
HUMBR_API humbr_status humbr_risk_simulate(const char* params_json, uint64_t trials,
                                           uint64_t seed, humbr_buffer** record);

/* Divergence report over result records (JSON lines). */
HUMBR_API humbr_status humbr_monitor(const char* results_jsonl, humbr_buffer** record);

/* ---- primitives --------------------------------------------------------- */

HUMBR_API humbr_status humbr_rouge_l(const char* a, const char* b, double* score);
HUMBR_API humbr_status humbr_beta_binomial_pmf(unsigned z, unsigned m, double mu, double rho,
                                               double* probability);
HUMBR_API humbr_status humbr_failure_probability_exact(unsigned k, unsigned m, double mu,
                                                       double rho, double tau,
                                                       double* probability);
HUMBR_API humbr_status humbr_effective_sample_size(unsigned k, unsigned m, double rho_bar,
                                                   double* n_eff);
HUMBR_API humbr_status humbr_hoeffding_bound(double n_eff, double tau, double mu_bar,
                                             double* bound);
/* *feasible is 0 when no finite M satisfies the design inequality. */
HUMBR_API humbr_status humbr_required_samples(unsigned k, double tau, double mu_bar,
                                              double rho_bar, double epsilon, unsigned* m,
                                              int* feasible);

#ifdef __cplusplus
}
#endif

#endif /* HUMBR_HUMBR_H */
