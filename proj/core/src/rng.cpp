#include "segtrans/rng.hpp"

namespace segtrans {

uint64_t derive_seed(uint64_t root, std::string_view purpose) {
  uint64_t h = 0xCBF29CE484222325ull;
  for (char c : purpose) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  // One splitmix round over the combination keeps sub-streams decorrelated.
  uint64_t z = root ^ h;
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace segtrans
