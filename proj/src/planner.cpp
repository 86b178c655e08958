#include "humbr/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "humbr/error.hpp"
#include "parallel.hpp"

namespace humbr {
namespace {

std::vector<ModelCatalogEntry> sorted_catalog(std::span<const ModelCatalogEntry> catalog) {
  if (catalog.empty()) throw Error(ErrorCode::kInvalidArgument, "model catalog is empty");
  std::vector<ModelCatalogEntry> out(catalog.begin(), catalog.end());
  std::set<std::string> ids;
  for (const auto& e : out) {
    validate(e);
    if (!ids.insert(e.model_id).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate model id in catalog: " + e.model_id);
    }
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.model_id < b.model_id; });
  return out;
}

void check_tau(double tau) {
  if (!(tau >= 0.5 && tau <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "tau must be in [0.5, 1]");
  }
}

std::vector<std::string> ids_of(const std::vector<ModelCatalogEntry>& catalog,
                                const std::vector<std::size_t>& members) {
  std::vector<std::string> ids;
  for (auto i : members) ids.push_back(catalog[i].model_id);
  return ids;
}

// Strict "better plan" order: lower cost, fewer samples, smaller id list.
bool cheaper(const Configuration& a, const Configuration& b,
             const std::vector<ModelCatalogEntry>& catalog) {
  if (a.cost != b.cost) return a.cost < b.cost;
  const auto na = a.members.size() * a.samples_per_model;
  const auto nb = b.members.size() * b.samples_per_model;
  if (na != nb) return na < nb;
  return ids_of(catalog, a.members) < ids_of(catalog, b.members);
}

EnsemblePlan to_plan(const Configuration& c, const std::vector<ModelCatalogEntry>& catalog,
                     bool feasible) {
  EnsemblePlan plan;
  std::vector<ModelCatalogEntry> members;
  for (auto i : c.members) members.push_back(catalog[i]);
  plan.models = ids_of(catalog, c.members);
  plan.samples_per_model = c.samples_per_model;
  plan.p_fail = c.p_fail;
  plan.certified_by = c.certified_by;
  plan.cost = c.cost;
  plan.assignments = assign_temperatures(members, c.samples_per_model);
  plan.feasible = feasible;
  return plan;
}

}  // namespace

void validate(const ModelCatalogEntry& e) {
  const std::string who = "catalog entry " + e.model_id + ": ";
  if (e.model_id.empty()) throw Error(ErrorCode::kInvalidArgument, "catalog entry without id");
  if (!(e.cost >= 0.0) || !std::isfinite(e.cost)) {
    throw Error(ErrorCode::kInvalidArgument, who + "cost must be >= 0");
  }
  if (!(e.mu > 0.0 && e.mu < 1.0)) throw Error(ErrorCode::kInvalidArgument, who + "mu must be in (0, 1)");
  if (!(e.rho >= 0.0 && e.rho < 1.0)) throw Error(ErrorCode::kInvalidArgument, who + "rho must be in [0, 1)");
  std::set<double> seen;
  for (double t : e.temperature_ladder) {
    if (!(t >= 0.0 && t <= 2.0)) {
      throw Error(ErrorCode::kInvalidArgument, who + "ladder temperature out of [0, 2]");
    }
    if (!seen.insert(t).second) {
      throw Error(ErrorCode::kInvalidArgument, who + "ladder temperatures must be distinct");
    }
  }
}

const char* to_string(Certification c) {
  return c == Certification::kExact ? "exact" : "hoeffding";
}

std::vector<SampleAssignment> assign_temperatures(std::span<const ModelCatalogEntry> members,
                                                  unsigned m) {
  std::vector<SampleAssignment> out;
  for (const auto& e : members) {
    const auto& ladder =
        e.temperature_ladder.empty() ? kDefaultTemperatureLadder : e.temperature_ladder;
    for (unsigned j = 0; j < m; ++j) out.push_back({e.model_id, ladder[j % ladder.size()]});
  }
  return out;
}

double evaluate_p_fail(std::span<const ModelCatalogEntry> members, unsigned m, double tau,
                       const PlanLimits& limits, Certification* used) {
  RiskParameters params;
  params.tau = tau;
  params.epsilon = 0.5;  // unused by the evaluators
  for (const auto& e : members) params.profiles.push_back({e.mu, e.rho, m});

  const unsigned n = params.total_samples();
  if (limits.policy == CertificationPolicy::kAuto && n <= limits.enumeration_ceiling) {
    if (used) *used = Certification::kExact;
    return failure_probability_exact(params, limits.enumeration_ceiling);
  }
  if (used) *used = Certification::kHoeffding;
  const double mu_bar = params.mean_mu();
  if (!(tau > mu_bar)) return 1.0;
  const double n_eff = effective_sample_size(static_cast<unsigned>(members.size()), m,
                                             params.mean_rho());
  return hoeffding_bound(n_eff, tau, mu_bar);
}

std::vector<Configuration> enumerate_configurations(std::span<const ModelCatalogEntry> raw,
                                                    double tau, const PlanLimits& limits) {
  check_tau(tau);
  if (limits.max_samples == 0) {
    throw Error(ErrorCode::kInvalidArgument, "max samples per model must be >= 1");
  }
  const auto catalog = sorted_catalog(raw);
  const std::size_t k = catalog.size();
  if (k > 20) {
    throw Error(ErrorCode::kInvalidArgument, "exhaustive planning supports at most 20 models");
  }
  const std::size_t max_k =
      limits.max_models == 0 ? k : std::min<std::size_t>(k, limits.max_models);

  std::vector<Configuration> configs;
  for (std::uint32_t mask = 1; mask < (1u << k); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) > max_k) continue;
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < k; ++i) {
      if (mask & (1u << i)) members.push_back(i);
    }
    for (unsigned m = 1; m <= limits.max_samples; ++m) {
      Configuration c;
      c.members = members;
      c.samples_per_model = m;
      configs.push_back(std::move(c));
    }
  }

  detail::parallel_for(configs.size(), limits.parallelism, [&](std::size_t idx) {
    auto& c = configs[idx];
    std::vector<ModelCatalogEntry> members;
    double mu_sum = 0.0, cost_per_round = 0.0;
    for (auto i : c.members) {
      members.push_back(catalog[i]);
      mu_sum += catalog[i].mu;
      cost_per_round += catalog[i].cost;
    }
    c.cost = cost_per_round * c.samples_per_model;
    c.threshold_feasible = tau > mu_sum / static_cast<double>(members.size());
    Certification used = Certification::kExact;
    const double p = evaluate_p_fail(members, c.samples_per_model, tau, limits, &used);
    c.certified_by = used;
    c.p_fail = c.threshold_feasible ? p : 1.0;
  });
  return configs;
}

PlanResult plan(std::span<const ModelCatalogEntry> raw, double tau, double epsilon,
                const PlanLimits& limits) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must be in (0, 1)");
  }
  const auto catalog = sorted_catalog(raw);
  const auto configs = enumerate_configurations(catalog, tau, limits);

  PlanResult result;
  const Configuration* best = nullptr;
  const Configuration* lowest = nullptr;
  bool any_threshold_feasible = false;
  for (const auto& c : configs) {
    any_threshold_feasible = any_threshold_feasible || c.threshold_feasible;
    if (!lowest || c.p_fail < lowest->p_fail) lowest = &c;
    if (!c.threshold_feasible || c.p_fail > epsilon) continue;
    if (!best || cheaper(c, *best, catalog)) best = &c;
  }
  if (lowest) result.best_p_fail = lowest->p_fail;
  if (best) {
    result.plan = to_plan(*best, catalog, true);
    return result;
  }

  std::ostringstream why;
  if (!any_threshold_feasible) {
    why << "tau (" << tau << ") does not exceed the mean error rate of any model subset";
  } else {
    why << "lowest reachable P_fail " << result.best_p_fail << " exceeds epsilon " << epsilon
        << " within max_models="
        << (limits.max_models == 0 ? catalog.size() : limits.max_models)
        << ", max_samples=" << limits.max_samples;
  }
  result.diagnostic = why.str();
  return result;
}

std::vector<FrontierPoint> pareto_frontier(std::span<const ModelCatalogEntry> raw, double tau,
                                           std::span<const double> budgets,
                                           const PlanLimits& limits) {
  if (budgets.empty()) throw Error(ErrorCode::kInvalidArgument, "budget grid is empty");
  const auto catalog = sorted_catalog(raw);
  const auto configs = enumerate_configurations(catalog, tau, limits);

  std::vector<FrontierPoint> out;
  for (double budget : budgets) {
    FrontierPoint point;
    point.budget = budget;
    const Configuration* best = nullptr;
    for (const auto& c : configs) {
      if (c.cost > budget || !c.threshold_feasible) continue;
      if (!best || c.p_fail < best->p_fail ||
          (c.p_fail == best->p_fail && cheaper(c, *best, catalog))) {
        best = &c;
      }
    }
    if (best) {
      point.p_fail = best->p_fail;
      point.plan = to_plan(*best, catalog, false);
    }
    out.push_back(std::move(point));
  }
  return out;
}

}  // namespace humbr
