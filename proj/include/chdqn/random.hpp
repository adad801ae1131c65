#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace chdqn {

/// Seeded random source. Distributions are implemented here rather than with
/// the <random> distribution templates so that streams are reproducible
/// across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Rejection sampling, so unbiased for any n.
  std::size_t index(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

/// Deterministically derives an independent stream seed from a run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Named streams of a training run.
enum class Stream : std::uint64_t { kWeightInit = 1, kEnvironment = 2, kAgent = 3 };

inline Rng make_stream(std::uint64_t seed, Stream stream) {
  return Rng(derive_seed(seed, static_cast<std::uint64_t>(stream)));
}

}  // namespace chdqn
