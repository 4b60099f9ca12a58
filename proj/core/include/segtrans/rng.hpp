#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace segtrans {

// Splitmix-style 64-bit generator. Chosen over std engines so that shuffles,
// dropout masks and bootstrap draws are identical across platforms and
// standard library versions.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : state_(seed) {}

  uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [0, bound). bound must be > 0.
  uint64_t next_below(uint64_t bound) {
    // Multiply-shift; bias is < 2^-64 per draw, irrelevant at our scales,
    // and the result is platform-stable.
    return static_cast<uint64_t>((static_cast<__uint128_t>(next_u64()) * bound) >> 64);
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  bool bernoulli(double p) { return next_double() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    // Fisher-Yates, descending.
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  uint64_t state() const { return state_; }

 private:
  uint64_t state_;
};

// Deterministic seed derivation: all randomness in a run flows from one root
// seed; sub-seeds are keyed by a purpose string (FNV-1a over the string,
// mixed with the root).
uint64_t derive_seed(uint64_t root, std::string_view purpose);

}  // namespace segtrans
