#include "gsc/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace gsc::rng {

std::uint64_t mix64(std::uint64_t x) {
  std::uint64_t z = x + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, Domain domain, std::uint64_t index) {
  std::uint64_t s = mix64(seed);
  s = mix64(s ^ static_cast<std::uint64_t>(domain));
  return mix64(s ^ index);
}

double Stream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t Stream::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("Stream::below: n must be positive");
  // 2^64 mod n, computed without overflow.
  const std::uint64_t threshold = (0 - n) % n;
  while (true) {
    const std::uint64_t x = engine_();
    if (x >= threshold) return x % n;
  }
}

double Stream::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace gsc::rng
