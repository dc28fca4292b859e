#pragma once

#include <cstdint>
#include <random>

namespace banditmac {

// Derives a child seed from (seed, index). Splitmix64 finalizer; the exact
// formula is part of the replay contract (see docs/schema.md) and must not
// change between releases.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

// Deterministic random stream. The engine is std::mt19937_64, which the
// standard pins bit-for-bit; every distribution on top of it is implemented
// here so that draws are identical on every platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // [0, 1), 53-bit resolution.
  double uniform();

  // Unbiased integer in [0, n). n must be positive.
  std::size_t uniform_below(std::size_t n);

  bool bernoulli(double p) { return uniform() < p; }

  // Inversion sampling; rate must be positive.
  double exponential(double rate);

  // Standard normal via Box-Muller (the sine component is discarded so each
  // call consumes exactly two engine draws).
  double normal();

  // Marsaglia-Tsang for shape >= 1, boosted for shape < 1. Unit scale.
  double gamma(double shape);

  double beta(double a, double b);

 private:
  std::mt19937_64 engine_;
};

}  // namespace banditmac
