#pragma once

#include <cstdint>
#include <random>

namespace ssd {

/**
 * Deterministic uniform stream.
 *
 * Every randomized operation in this library documents exactly how many
 * uniforms it consumes, so a (seed, call sequence) pair replays
 * bit-identically on any platform. The mapping from engine output to
 * [0, 1) is pinned: top 53 bits of one mt19937_64 step.
 */
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  // Uniform double in [0, 1). Consumes exactly one engine step.
  double next_uniform() {
    ++draws_;
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Number of uniforms handed out so far.
  std::uint64_t draws() const { return draws_; }

 private:
  std::mt19937_64 engine_;
  std::uint64_t draws_ = 0;
};

// Stable seed derivation for independent sub-streams (sweep points, trials).
// The splitmix64 finalizer is applied after each component so the roles of
// base, a, and b never commute.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                                 std::uint64_t b = 0) {
  auto mix = [](std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(base) + a) + b);
}

}  // namespace ssd
