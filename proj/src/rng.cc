#include "ctxfuzz/rng.h"

#include <numeric>

namespace ctxfuzz {
namespace {

uint64_t SplitMix(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

uint64_t Rng::Below(uint64_t n) {
  // Rejection sampling on the top of the range keeps the draw unbiased.
  uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  uint64_t v;
  do {
    v = Next();
  } while (v >= limit && limit != 0);
  return v % n;
}

uint64_t Rng::Range(uint64_t lo, uint64_t hi) {
  if (lo == 0 && hi == UINT64_MAX) return Next();
  return lo + Below(hi - lo + 1);
}

Word Rng::RandomWord() {
  Word::Rep r = 0;
  for (int i = 0; i < 4; ++i) r = (r << 64) | Next();
  return Word::FromRep(r);
}

Word Rng::WordBelow(const Word& n) {
  if (n.FitsU64()) return Word(Below(n.Low64()));
  unsigned bits = (n - Word(1)).BitLength();
  Word::Rep mask = bits >= 256 ? ~Word::Rep(0) : ((Word::Rep(1) << bits) - 1);
  for (;;) {
    Word w = Word::FromRep(RandomWord().rep() & mask);
    if (w < n) return w;
  }
}

Word Rng::WordRange(const Word& lo, const Word& hi) { return lo + WordBelow(hi - lo); }

Word Rng::WordAtLeast(const Word& lo) {
  if (lo.IsZero()) return RandomWord();
  // Size of [lo, 2^256) is 2^256 - lo, which is (~lo) + 1.
  Word span = ~lo + Word(1);
  return lo + WordBelow(span);
}

Bytes Rng::RandomBytes(size_t n) {
  Bytes out(n);
  for (size_t i = 0; i < n; i += 8) {
    uint64_t v = Next();
    for (size_t j = i; j < n && j < i + 8; ++j) {
      out[j] = static_cast<uint8_t>(v);
      v >>= 8;
    }
  }
  return out;
}

size_t Rng::Weighted(std::span<const double> weights) {
  double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double x = Unit() * total;
  for (size_t i = 0; i < weights.size(); ++i) {
    if (x < weights[i]) return i;
    x -= weights[i];
  }
  // Rounding can leave x just past the last bucket.
  for (size_t i = weights.size(); i-- > 0;) {
    if (weights[i] > 0) return i;
  }
  return 0;
}

uint64_t DeriveSeed(uint64_t seed, std::string_view label, uint64_t index) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : label) h = (h ^ static_cast<uint8_t>(c)) * 0x100000001b3ULL;
  return SplitMix(SplitMix(seed ^ h) + index);
}

}  // namespace ctxfuzz
