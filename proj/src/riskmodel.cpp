#include "humbr/riskmodel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <string>

#include "humbr/error.hpp"
#include "humbr/random.hpp"
#include "parallel.hpp"

namespace humbr {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::uint64_t kTrialsPerChunk = 1u << 16;

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

double log_choose(unsigned n, unsigned k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

void check_mu(double mu) {
  if (!(mu > 0.0 && mu < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "mu must be in (0, 1), got " + std::to_string(mu));
  }
}

double clamp_rho(double rho) {
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "rho must be in [0, 1), got " + std::to_string(rho));
  }
  return std::min(rho, kMaxRho);
}

}  // namespace

unsigned RiskParameters::total_samples() const {
  unsigned n = 0;
  for (const auto& p : profiles) n += p.samples;
  return n;
}

double RiskParameters::mean_mu() const {
  double num = 0.0, den = 0.0;
  for (const auto& p : profiles) {
    num += p.mu * p.samples;
    den += p.samples;
  }
  return den > 0 ? num / den : 0.0;
}

double RiskParameters::mean_rho() const {
  double num = 0.0, den = 0.0;
  for (const auto& p : profiles) {
    num += std::min(p.rho, kMaxRho) * p.samples;
    den += p.samples;
  }
  return den > 0 ? num / den : 0.0;
}

RiskParameters uniform_parameters(unsigned k, unsigned m, double mu, double rho, double tau,
                                  double epsilon) {
  RiskParameters params;
  params.profiles.assign(k, ModelErrorProfile{mu, rho, m});
  params.tau = tau;
  params.epsilon = epsilon;
  return params;
}

ModelErrorProfile checked(ModelErrorProfile p) {
  check_mu(p.mu);
  p.rho = clamp_rho(p.rho);
  if (p.samples == 0) throw Error(ErrorCode::kInvalidArgument, "samples per model must be >= 1");
  return p;
}

void validate(const RiskParameters& params) {
  if (params.profiles.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "at least one model profile is required");
  }
  for (const auto& p : params.profiles) (void)checked(p);
  if (!(params.tau >= 0.5 && params.tau <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "tau must be in [0.5, 1]");
  }
  if (!(params.epsilon > 0.0 && params.epsilon < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must be in (0, 1)");
  }
}

unsigned failure_threshold_count(double tau, unsigned n) {
  // The slack absorbs representation error in tau (0.7 * 10 must give 7).
  const double t = std::ceil(tau * static_cast<double>(n) - 1e-9);
  return static_cast<unsigned>(std::max(0.0, t));
}

// P(Z = z) = C(m, z) B(z + a, m - z + b) / B(a, b). With theta = 1/(a + b) =
// rho / (1 - rho) the Beta ratio is a ratio of rising factorials,
//     prod_{i<z}(mu + i·theta) prod_{i<m-z}(1 - mu + i·theta) / prod_{i<m}(1 + i·theta),
// which stays exact as rho -> 0 instead of subtracting huge log-gammas.
double log_beta_binomial_pmf(unsigned z, unsigned m, double mu, double rho) {
  check_mu(mu);
  rho = clamp_rho(rho);
  if (z > m) throw Error(ErrorCode::kInvalidArgument, "z must be <= M");
  double lp = log_choose(m, z);
  if (rho < kBinomialLimitRho) {
    return lp + z * std::log(mu) + (m - z) * std::log1p(-mu);
  }
  const double theta = rho / (1.0 - rho);
  for (unsigned i = 0; i < z; ++i) lp += std::log(mu + i * theta);
  for (unsigned i = 0; i < m - z; ++i) lp += std::log((1.0 - mu) + i * theta);
  for (unsigned i = 1; i < m; ++i) lp -= std::log1p(i * theta);
  return lp;
}

double beta_binomial_pmf(unsigned z, unsigned m, double mu, double rho) {
  return std::exp(log_beta_binomial_pmf(z, m, mu, rho));
}

std::vector<double> log_beta_binomial_pmfs(unsigned m, double mu, double rho) {
  std::vector<double> out(m + 1);
  for (unsigned z = 0; z <= m; ++z) out[z] = log_beta_binomial_pmf(z, m, mu, rho);
  return out;
}

double log_failure_probability_exact(const RiskParameters& params, unsigned ceiling) {
  validate(params);
  const unsigned n = params.total_samples();
  if (n > ceiling) {
    throw Error(ErrorCode::kCeilingExceeded,
                "exact enumeration over " + std::to_string(n) + " samples exceeds ceiling " +
                    std::to_string(ceiling) + "; use Monte Carlo");
  }
  // dist[s] = log P(sum of Z over models seen so far = s)
  std::vector<double> dist{0.0};
  for (const auto& raw : params.profiles) {
    const auto p = checked(raw);
    const auto pmf = log_beta_binomial_pmfs(p.samples, p.mu, p.rho);
    std::vector<double> next(dist.size() + p.samples, kNegInf);
    for (std::size_t s = 0; s < dist.size(); ++s) {
      if (dist[s] == kNegInf) continue;
      for (std::size_t z = 0; z < pmf.size(); ++z) {
        next[s + z] = log_add(next[s + z], dist[s] + pmf[z]);
      }
    }
    dist = std::move(next);
  }
  double tail = kNegInf;
  for (std::size_t s = failure_threshold_count(params.tau, n); s < dist.size(); ++s) {
    tail = log_add(tail, dist[s]);
  }
  return std::min(tail, 0.0);
}

double failure_probability_exact(const RiskParameters& params, unsigned ceiling) {
  return std::exp(log_failure_probability_exact(params, ceiling));
}

MonteCarloEstimate failure_probability_mc(const RiskParameters& params, std::uint64_t trials,
                                          std::uint64_t seed, std::size_t workers) {
  validate(params);
  if (trials < 1000) {
    throw Error(ErrorCode::kInvalidArgument, "Monte Carlo needs at least 1000 trials");
  }
  std::vector<ModelErrorProfile> profiles;
  for (const auto& p : params.profiles) profiles.push_back(checked(p));
  const unsigned n = params.total_samples();
  const unsigned threshold = failure_threshold_count(params.tau, n);

  const std::uint64_t chunks = (trials + kTrialsPerChunk - 1) / kTrialsPerChunk;
  std::atomic<std::uint64_t> failures{0};
  detail::parallel_for(chunks, workers == 0 ? detail::default_workers() : workers,
                       [&](std::size_t c) {
    const std::uint64_t begin = c * kTrialsPerChunk;
    const std::uint64_t count = std::min(kTrialsPerChunk, trials - begin);
    Rng rng(splitmix64(seed ^ splitmix64(c + 1)));
    std::uint64_t local = 0;
    for (std::uint64_t t = 0; t < count; ++t) {
      unsigned divergent = 0;
      for (const auto& p : profiles) {
        double pi = p.mu;
        if (p.rho >= kBinomialLimitRho) {
          const double scale = 1.0 / p.rho - 1.0;
          pi = rng.beta(p.mu * scale, (1.0 - p.mu) * scale);
        }
        divergent += rng.binomial(p.samples, pi);
      }
      if (divergent >= threshold) ++local;
    }
    failures.fetch_add(local, std::memory_order_relaxed);
  });

  MonteCarloEstimate est;
  est.trials = trials;
  est.failures = failures.load();
  est.estimate = static_cast<double>(est.failures) / static_cast<double>(trials);
  est.standard_error =
      std::sqrt(est.estimate * (1.0 - est.estimate) / static_cast<double>(trials));
  return est;
}

double effective_sample_size(unsigned k, unsigned m, double rho_bar) {
  if (k == 0 || m == 0) throw Error(ErrorCode::kInvalidArgument, "K and M must be >= 1");
  if (!(rho_bar >= 0.0 && rho_bar <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "rho_bar must be in [0, 1]");
  }
  return static_cast<double>(k) * m / (1.0 + (m - 1.0) * rho_bar);
}

double hoeffding_bound(double n_eff, double tau, double mu_bar) {
  if (!(tau > mu_bar)) {
    throw Error(ErrorCode::kInfeasibleThreshold,
                "Hoeffding bound is vacuous: tau (" + std::to_string(tau) +
                    ") must exceed mean error rate (" + std::to_string(mu_bar) + ")");
  }
  if (!(n_eff > 0.0)) return 1.0;
  const double gap = tau - mu_bar;
  return std::clamp(std::exp(-2.0 * n_eff * gap * gap), 0.0, 1.0);
}

SampleRequirement required_samples(unsigned k, double tau, double mu_bar, double rho_bar,
                                   double epsilon) {
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "K must be >= 1");
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must be in (0, 1)");
  }
  if (!(rho_bar >= 0.0 && rho_bar <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "rho_bar must be in [0, 1]");
  }
  if (!(tau > mu_bar)) {
    throw Error(ErrorCode::kInfeasibleThreshold,
                "tau must exceed the mean error rate for any M to suffice");
  }
  const double log_inv_eps = std::log(1.0 / epsilon);
  const double gap = tau - mu_bar;
  const double denom = 2.0 * k * gap * gap - rho_bar * log_inv_eps;
  SampleRequirement req;
  if (!(denom > 0.0)) {
    req.raw_bound = std::numeric_limits<double>::infinity();
    return req;
  }
  req.feasible = true;
  req.raw_bound = log_inv_eps * (1.0 - rho_bar) / denom;
  const double m = std::max(1.0, std::ceil(req.raw_bound));
  if (m > static_cast<double>(std::numeric_limits<unsigned>::max())) {
    req.feasible = false;
    return req;
  }
  req.samples = static_cast<unsigned>(m);
  return req;
}

FailureEstimate estimate_failure(const RiskParameters& params, const EstimateOptions& opts) {
  validate(params);
  FailureEstimate out;
  out.total_samples = params.total_samples();
  out.mu_bar = params.mean_mu();
  out.rho_bar = opts.rho_bar.value_or(params.mean_rho());
  const double mean_m =
      static_cast<double>(out.total_samples) / static_cast<double>(params.profiles.size());
  out.effective_samples =
      out.total_samples / (1.0 + (mean_m - 1.0) * out.rho_bar);

  if (out.total_samples <= opts.ceiling) {
    out.exact = failure_probability_exact(params, opts.ceiling);
  }
  if (params.tau > out.mu_bar) {
    out.hoeffding = hoeffding_bound(out.effective_samples, params.tau, out.mu_bar);
  }
  if (opts.mc_trials > 0) {
    out.monte_carlo = failure_probability_mc(params, opts.mc_trials, opts.seed, opts.workers);
  }
  return out;
}

}  // namespace humbr
