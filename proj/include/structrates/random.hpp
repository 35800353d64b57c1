#pragma once

#include <cstdint>
#include <random>

namespace structrates {

/// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for trial `trial` at grid position `n_index`. Depends only on the
/// triple, so trials can run in any order.
constexpr std::uint64_t trial_seed(std::uint64_t master, std::uint64_t n_index, std::uint64_t trial) {
  return mix64(mix64(mix64(master) ^ n_index) ^ (trial + 0x632be59bd9b4e019ULL));
}

/// 64-bit Mersenne Twister with a portable uniform-double draw (the standard
/// distributions are implementation-defined).
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

private:
  std::mt19937_64 engine_;
};

}  // namespace structrates
