#pragma once

#include <cstdint>
#include <initializer_list>

namespace cyclematch::detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Order-sensitive hash of several integers, used to seed per-frame RNGs so
/// that sampled values depend only on their coordinates.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) {
  std::uint64_t h = 0x6A09E667F3BCC909ull;
  for (std::uint64_t v : {a, b, c, d}) {
    h = splitmix64(h ^ v);
  }
  return h;
}

}  // namespace cyclematch::detail
