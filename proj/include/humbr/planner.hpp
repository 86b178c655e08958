#pragma once

// Cost-minimal ensemble design under a failure-probability constraint:
//
//     min over (subset K, M)  sum_{k in K} cost_k * M
//     s.t.                    P_fail(tau; M, mu_k, rho_k) <= epsilon
//
// Search is exhaustive over subsets and M within the configured limits.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "humbr/riskmodel.hpp"

namespace humbr {

inline const std::vector<double> kDefaultTemperatureLadder{0.0, 0.25, 0.5, 0.75};

struct ModelCatalogEntry {
  std::string model_id;
  double cost = 1.0;  // abstract units per call, >= 0
  double mu = 0.1;
  double rho = 0.0;
  std::vector<double> temperature_ladder = kDefaultTemperatureLadder;
};

void validate(const ModelCatalogEntry& entry);

enum class Certification { kExact, kHoeffding };

const char* to_string(Certification c);

enum class CertificationPolicy {
  kAuto,       // exact enumeration when N fits under the ceiling, else Hoeffding
  kHoeffding,  // always the closed-form bound (the design-inequality view)
};

struct PlanLimits {
  unsigned max_models = 0;  // 0 = catalog size
  unsigned max_samples = 8;
  unsigned enumeration_ceiling = kDefaultEnumerationCeiling;
  CertificationPolicy policy = CertificationPolicy::kAuto;
  std::size_t parallelism = 1;
};

struct SampleAssignment {
  std::string model_id;
  double temperature = 0.0;
};

struct EnsemblePlan {
  std::vector<std::string> models;  // sorted by id
  unsigned samples_per_model = 0;
  double p_fail = 1.0;
  Certification certified_by = Certification::kExact;
  double cost = 0.0;
  std::vector<SampleAssignment> assignments;  // one per sample
  bool feasible = false;

  std::size_t total_samples() const { return models.size() * samples_per_model; }
};

struct PlanResult {
  std::optional<EnsemblePlan> plan;  // empty means Infeasible
  std::string diagnostic;            // binding constraint when infeasible
  double best_p_fail = 1.0;          // lowest P_fail seen within limits
};

/// Evaluated (subset, M) configuration. p_fail is 1 when neither route can
/// certify anything (tau <= mu_bar on the Hoeffding route).
struct Configuration {
  std::vector<std::size_t> members;  // indices into the id-sorted catalog
  unsigned samples_per_model = 0;
  double cost = 0.0;
  double p_fail = 1.0;
  Certification certified_by = Certification::kExact;
  bool threshold_feasible = false;  // tau > mu_bar for this subset
};

/// Every (subset, M) within limits, evaluated, over the catalog sorted by id.
std::vector<Configuration> enumerate_configurations(std::span<const ModelCatalogEntry> catalog,
                                                    double tau, const PlanLimits& limits);

/// P_fail of one configuration via the policy's route.
double evaluate_p_fail(std::span<const ModelCatalogEntry> members, unsigned m, double tau,
                       const PlanLimits& limits, Certification* used = nullptr);

/// Sample j of a model uses ladder[j mod ladder.size()].
std::vector<SampleAssignment> assign_temperatures(std::span<const ModelCatalogEntry> members,
                                                  unsigned m);

/// Minimum-cost configuration with P_fail <= epsilon. Ties: fewer total
/// samples, then lexicographically smaller list of model ids.
PlanResult plan(std::span<const ModelCatalogEntry> catalog, double tau, double epsilon,
                const PlanLimits& limits);

struct FrontierPoint {
  double budget = 0.0;
  double p_fail = 1.0;
  std::optional<EnsemblePlan> plan;  // empty when nothing is affordable
};

/// For each budget: the lowest P_fail among configurations costing at most
/// the budget (cheapest such configuration on ties).
std::vector<FrontierPoint> pareto_frontier(std::span<const ModelCatalogEntry> catalog, double tau,
                                           std::span<const double> budgets,
                                           const PlanLimits& limits);

}  // namespace humbr
