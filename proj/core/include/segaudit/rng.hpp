#pragma once

#include <cstdint>
#include <random>

namespace segaudit {

// All randomness in the toolkit flows through these helpers. The standard
// <random> distributions are implementation-defined, so the transforms are
// hand-rolled to keep seeded runs reproducible across toolchains.

/// Uniform double in [0, 1) using the top 53 bits of one draw.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Standard normal via Box-Muller (consumes two draws per call).
double gaussian(std::mt19937_64& rng);

/// Binomial(n, p) as n Bernoulli draws; always consumes exactly n draws.
std::int64_t binomial_draw(std::mt19937_64& rng, std::int64_t n, double p);

/// Uniform integer in [0, n) without modulo bias.
std::uint64_t bounded_uniform(std::mt19937_64& rng, std::uint64_t n);

/// Derive an independent stream seed from a base seed and a salt.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt);

}  // namespace segaudit
