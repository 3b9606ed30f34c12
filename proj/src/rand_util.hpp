#pragma once

#include <cstdint>

#include "canonforge/domain.hpp"

namespace canonforge {

/// Unbiased draw from [0, n); n must be positive.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
  std::uint64_t limit = ~0ull - ~0ull % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

/// Unbiased draw from [0, n) for big n: sample msb-bit-bounded candidates
/// until one falls below n (at most two expected rounds).
inline BigInt uniform_below_big(Rng& rng, const BigInt& n) {
  std::size_t bits = msb(n) + 1;  // n > 0
  while (true) {
    BigInt x = 0;
    for (std::size_t off = 0; off < bits; off += 64) {
      x <<= 64;
      x |= BigInt(rng());
    }
    x >>= (64 - bits % 64) % 64;
    if (x < n) return x;
  }
}

}  // namespace canonforge
