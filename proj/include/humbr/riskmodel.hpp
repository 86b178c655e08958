#pragma once

// Failure-probability machinery for an ensemble of K models drawing M samples
// each. A sample is "divergent" when it disagrees with the consensus mode; the
// ensemble fails when the divergent fraction reaches the consensus threshold.
//
// Per model k the divergent count follows the Beta-Binomial hierarchy
//     pi_k ~ Beta(a_k, b_k),  Z_k | pi_k ~ Binomial(M_k, pi_k),
// with a = mu (1/rho - 1), b = (1 - mu)(1/rho - 1), i.e. mean error rate mu and
// intra-model correlation rho.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace humbr {

/// rho values are clamped into [0, kMaxRho]; rho = 1 exists only as a limit.
inline constexpr double kMaxRho = 1.0 - 1e-9;
/// Below this rho the pmf is the Binomial(M, mu) pmf.
inline constexpr double kBinomialLimitRho = 1e-12;
inline constexpr unsigned kDefaultEnumerationCeiling = 256;

struct ModelErrorProfile {
  double mu = 0.1;       // (0, 1)
  double rho = 0.0;      // [0, 1)
  unsigned samples = 1;  // M_k >= 1
};

struct RiskParameters {
  std::vector<ModelErrorProfile> profiles;  // K >= 1
  double tau = 0.7;                         // [0.5, 1]
  double epsilon = 1e-4;                    // (0, 1)

  unsigned total_samples() const;
  /// Sample-weighted mean error rate.
  double mean_mu() const;
  /// Sample-weighted mean correlation.
  double mean_rho() const;
};

/// K identical profiles.
RiskParameters uniform_parameters(unsigned k, unsigned m, double mu, double rho,
                                  double tau, double epsilon = 1e-4);

/// Validates ranges and clamps rho into [0, kMaxRho]. Throws kInvalidArgument.
ModelErrorProfile checked(ModelErrorProfile p);
void validate(const RiskParameters& params);

/// Smallest divergent count that lands in the failure region, ceil(tau * n)
/// (an integral tau * n is itself a failure).
unsigned failure_threshold_count(double tau, unsigned n);

/// log P(Z = z) for Z ~ BetaBinomial(m, mu, rho).
double log_beta_binomial_pmf(unsigned z, unsigned m, double mu, double rho);
double beta_binomial_pmf(unsigned z, unsigned m, double mu, double rho);
/// log pmf for z = 0..m.
std::vector<double> log_beta_binomial_pmfs(unsigned m, double mu, double rho);

/// log P_fail by convolving the per-model pmfs over the total divergent count.
/// Throws kCeilingExceeded when total samples exceed `ceiling`.
double log_failure_probability_exact(const RiskParameters& params,
                                     unsigned ceiling = kDefaultEnumerationCeiling);
double failure_probability_exact(const RiskParameters& params,
                                 unsigned ceiling = kDefaultEnumerationCeiling);

struct MonteCarloEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;  // sqrt(p(1 - p) / trials) at p = estimate
  std::uint64_t trials = 0;
  std::uint64_t failures = 0;
};

/// Simulates the hierarchy. Trials are split into fixed-size chunks whose
/// seeds derive from (seed, chunk index), so the result depends only on
/// (params, trials, seed), never on the number of worker threads.
/// Requires trials >= 1000.
MonteCarloEstimate failure_probability_mc(const RiskParameters& params,
                                          std::uint64_t trials, std::uint64_t seed,
                                          std::size_t workers = 0);

/// K·M / (1 + (M - 1)·rho_bar).
double effective_sample_size(unsigned k, unsigned m, double rho_bar);

/// exp(-2·N_eff·(tau - mu_bar)^2) clamped to [0, 1]. Throws
/// kInfeasibleThreshold when tau <= mu_bar.
double hoeffding_bound(double n_eff, double tau, double mu_bar);

struct SampleRequirement {
  bool feasible = false;
  unsigned samples = 0;    // smallest M meeting the design inequality
  double raw_bound = 0.0;  // unrounded right-hand side; +inf when infeasible
};

/// Smallest M with M >= ln(1/eps)(1 - rho_bar) / (2K(tau - mu_bar)^2 - rho_bar ln(1/eps)).
/// Infeasible when the denominator is <= 0. Throws kInfeasibleThreshold when
/// tau <= mu_bar.
SampleRequirement required_samples(unsigned k, double tau, double mu_bar, double rho_bar,
                                   double epsilon);

struct FailureEstimate {
  std::optional<double> exact;
  std::optional<double> hoeffding;  // absent when tau <= mu_bar
  std::optional<MonteCarloEstimate> monte_carlo;
  unsigned total_samples = 0;
  double effective_samples = 0.0;
  double mu_bar = 0.0;
  double rho_bar = 0.0;
};

struct EstimateOptions {
  std::optional<double> rho_bar;  // default: params.mean_rho()
  unsigned ceiling = kDefaultEnumerationCeiling;
  std::uint64_t mc_trials = 0;    // 0 disables Monte Carlo
  std::uint64_t seed = 0;
  std::size_t workers = 0;
};

/// Exact (when enumerable), Hoeffding and Monte Carlo side by side. The
/// effective sample size uses the mean M across profiles.
FailureEstimate estimate_failure(const RiskParameters& params, const EstimateOptions& opts);

}  // namespace humbr
