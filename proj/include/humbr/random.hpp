#pragma once

// Portable seeded sampling. Only the engine (std::mt19937_64, whose output
// sequence is fixed by the C++ standard) comes from the standard library; the
// distributions are implemented here because libstdc++/libc++/MSVC disagree on
// theirs. Given a seed, every draw is identical on every conforming platform.

#include <cstdint>
#include <random>

namespace humbr {

/// SplitMix64 finalizer, used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t x);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1).
  double uniform_open();
  /// Standard normal (Marsaglia polar method).
  double normal();
  /// log of a Gamma(shape, 1) draw (Marsaglia-Tsang, with the shape < 1
  /// boost done in log space so tiny shapes do not underflow).
  double log_gamma_variate(double shape);
  /// Beta(a, b) draw.
  double beta(double a, double b);
  /// Binomial(n, p) by summing Bernoulli trials; intended for small n.
  unsigned binomial(unsigned n, double p);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace humbr
