#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

#include "ctxfuzz/bytes.h"
#include "ctxfuzz/word.h"

namespace ctxfuzz {

// Deterministic random source. Only the raw 64-bit engine output is used, so
// streams are identical across standard library implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t Next() { return engine_(); }
  // Uniform in [0, n); n must be > 0.
  uint64_t Below(uint64_t n);
  // Uniform in [lo, hi], inclusive.
  uint64_t Range(uint64_t lo, uint64_t hi);
  // Uniform in [0, 1).
  double Unit() { return static_cast<double>(Next() >> 11) * 0x1.0p-53; }
  bool Chance(double p) { return Unit() < p; }

  Word RandomWord();
  // Uniform in [0, n); n must be nonzero.
  Word WordBelow(const Word& n);
  // Uniform in [lo, hi); hi > lo.
  Word WordRange(const Word& lo, const Word& hi);
  // Uniform in [lo, 2^256).
  Word WordAtLeast(const Word& lo);
  Bytes RandomBytes(size_t n);

  template <typename T>
  const T& Pick(std::span<const T> items) {
    return items[Below(items.size())];
  }

  // Index drawn proportionally to the (non-negative) weights.
  size_t Weighted(std::span<const double> weights);

 private:
  std::mt19937_64 engine_;
};

// Derives an independent seed for a named sub-stream.
uint64_t DeriveSeed(uint64_t seed, std::string_view label, uint64_t index = 0);

}  // namespace ctxfuzz
