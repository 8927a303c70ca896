#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace street {

// Deterministic RNG wrapper. mt19937_64 output is pinned by the standard, and
// the distributions below are hand-rolled so streams are identical across
// compilers and platforms.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t u64() { return engine_(); }

  // Uniform in [0, n). n must be > 0.
  uint64_t uniform_int(uint64_t n) { return engine_() % n; }

  int uniform_range(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(uniform_int(static_cast<uint64_t>(hi - lo + 1)));
  }

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool chance(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

// Stable seed derivation: every module draws its randomness from a single
// top-level seed plus a purpose string, FNV-1a folded with splitmix64.
inline uint64_t derive_seed(uint64_t base, std::string_view purpose, uint64_t index = 0) {
  uint64_t h = 0xcbf29ce484222325ull ^ base;
  for (unsigned char c : purpose) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  h ^= index + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  // splitmix64 finalizer
  h ^= h >> 30;
  h *= 0xbf58476d1ce4e5b9ull;
  h ^= h >> 27;
  h *= 0x94d049bb133111ebull;
  h ^= h >> 31;
  return h;
}

}  // namespace street
