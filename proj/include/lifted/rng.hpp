#pragma once

#include <cstdint>
#include <random>

#include "lifted/state.hpp"

namespace lifted {

using Rng = std::mt19937_64;

// 53-bit uniform on [0, 1). Used for every accept/reject and inverse-CDF
// draw so that chains are reproducible independently of the standard
// library's distribution implementations.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline Direction random_direction(Rng& rng) {
  return uniform01(rng) < 0.5 ? Direction::down : Direction::up;
}

inline BinaryState random_state(std::size_t n, Rng& rng) {
  BinaryState x(n, -1);
  for (std::size_t i = 0; i < n; ++i)
    if (uniform01(rng) < 0.5) x.flip(i);
  return x;
}

}  // namespace lifted
