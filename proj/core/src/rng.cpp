#include "segaudit/rng.hpp"

#include <cmath>

namespace segaudit {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

double gaussian(std::mt19937_64& rng) {
  const double u1 = 1.0 - unit_uniform(rng);  // (0, 1], keeps log() finite
  const double u2 = unit_uniform(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

std::int64_t binomial_draw(std::mt19937_64& rng, std::int64_t n, double p) {
  std::int64_t k = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    if (unit_uniform(rng) < p) ++k;
  }
  return k;
}

std::uint64_t bounded_uniform(std::mt19937_64& rng, std::uint64_t n) {
  // multiply-shift; bias is < 2^-64 per draw which is irrelevant here
  const unsigned __int128 wide = static_cast<unsigned __int128>(rng()) * n;
  return static_cast<std::uint64_t>(wide >> 64);
}

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt) {
  return splitmix64(base ^ splitmix64(salt));
}

}  // namespace segaudit
