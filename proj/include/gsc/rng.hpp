#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace gsc::rng {

// Every random draw in the library goes through a Stream. A stream is a
// std::mt19937_64 seeded with derive_seed(seed, domain, index), so each
// consumer (a CV split, a bootstrap replicate, one simulated unit) owns an
// independent sequence that does not depend on how many other streams
// exist or on the order in which workers run them.
//
// Bounded integers use rejection sampling and uniforms use the top 53 bits,
// so draws are identical across standard libraries (std distributions are
// implementation-defined and are not used).

enum class Domain : std::uint64_t {
  kCvFolds = 1,
  kBootstrap = 2,
  kSimFactor = 3,
  kSimControl = 4,
  kSimTreated = 5,
};

/// splitmix64 finalizer applied to (x + golden ratio).
std::uint64_t mix64(std::uint64_t x);

std::uint64_t derive_seed(std::uint64_t seed, Domain domain, std::uint64_t index);

class Stream {
 public:
  Stream(std::uint64_t seed, Domain domain, std::uint64_t index)
      : engine_(derive_seed(seed, domain, index)) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform();
  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n);
  /// Standard normal via Box-Muller (one draw per call, no cached pair).
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace gsc::rng
