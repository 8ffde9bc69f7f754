#pragma once

// Seeded, versioned random source shared by the generator and the MAC
// simulator. Every output is specified bit-for-bit so that traces and runs can
// be regenerated by any implementation:
//
//   state' = state * 6364136223846793005 + 1442695040888963407  (mod 2^64)
//   next() = state' >> 32
//   uniform(n) = (next() * n) >> 32
//
// Independent streams are derived with the SplitMix64 finalizer applied to
// seed + (stream + 1) * 0x9E3779B97F4A7C15.

#include <cstdint>
#include <random>
#include <stdexcept>

namespace plcss {

inline constexpr const char* kPrngName = "lcg64-mmix-v1";

inline constexpr std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class Lcg64 {
 public:
  using Engine = std::linear_congruential_engine<std::uint64_t, 6364136223846793005ULL,
                                                 1442695040888963407ULL, 0ULL>;

  explicit Lcg64(std::uint64_t seed) : engine_(seed) {}

  /// Seed of the independent stream `stream` derived from `seed`.
  static constexpr std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64_mix(seed + (stream + 1) * 0x9E3779B97F4A7C15ULL);
  }
  static Lcg64 stream(std::uint64_t seed, std::uint64_t stream) { return Lcg64(stream_seed(seed, stream)); }

  std::uint32_t next() { return static_cast<std::uint32_t>(engine_() >> 32); }

  /// Uniform integer in [0, n). Multiply-shift mapping; bias is below 2^-32 * n.
  std::uint32_t uniform(std::uint32_t n) {
    if (n == 0) throw std::invalid_argument("Lcg64::uniform: empty range");
    return static_cast<std::uint32_t>((static_cast<std::uint64_t>(next()) * n) >> 32);
  }

  /// Uniform integer in [lo, hi].
  int uniform_int(int lo, int hi) {
    if (hi < lo) throw std::invalid_argument("Lcg64::uniform_int: hi < lo");
    return lo + static_cast<int>(uniform(static_cast<std::uint32_t>(hi - lo + 1)));
  }

  /// Uniform double in [0, 1) with 32 bits of resolution.
  double unit() { return next() * (1.0 / 4294967296.0); }

 private:
  Engine engine_;
};

}  // namespace plcss
