#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

#include "ctxfuzz/bytes.h"

namespace ctxfuzz {

// Unsigned 256-bit EVM word. Arithmetic wraps modulo 2^256.
class Word {
 public:
  using Rep = boost::multiprecision::uint256_t;

  Word() = default;
  Word(uint64_t v) : rep_(v) {}  // NOLINT: implicit by design of EVM literals
  static Word FromRep(const Rep& r) { return Word(r, 0); }

  // Big-endian, at most 32 bytes; shorter inputs are left-padded.
  static Word FromBigEndian(std::span<const uint8_t> bytes);
  // Quantity form: optional 0x prefix, 1..64 hex digits, leading zeros allowed.
  static Word FromHex(std::string_view hex);
  static Word Max() { return FromRep(~Rep(0)); }

  std::array<uint8_t, 32> ToBigEndian() const;
  // Minimal lowercase quantity: "0x0", "0x1f", ...
  std::string Hex() const;
  std::string Decimal() const;

  bool IsZero() const { return rep_.is_zero(); }
  bool FitsU64() const { return rep_ <= Rep(UINT64_MAX); }
  uint64_t Low64() const { return static_cast<uint64_t>(rep_ & Rep(UINT64_MAX)); }
  unsigned BitLength() const;
  const Rep& rep() const { return rep_; }

  friend Word operator+(const Word& a, const Word& b) { return FromRep(a.rep_ + b.rep_); }
  friend Word operator-(const Word& a, const Word& b) { return FromRep(a.rep_ - b.rep_); }
  friend Word operator*(const Word& a, const Word& b) { return FromRep(a.rep_ * b.rep_); }
  // x / 0 == 0 and x % 0 == 0, matching the EVM.
  friend Word operator/(const Word& a, const Word& b) {
    return b.IsZero() ? Word() : FromRep(a.rep_ / b.rep_);
  }
  friend Word operator%(const Word& a, const Word& b) {
    return b.IsZero() ? Word() : FromRep(a.rep_ % b.rep_);
  }
  friend Word operator&(const Word& a, const Word& b) { return FromRep(a.rep_ & b.rep_); }
  friend Word operator|(const Word& a, const Word& b) { return FromRep(a.rep_ | b.rep_); }
  friend Word operator^(const Word& a, const Word& b) { return FromRep(a.rep_ ^ b.rep_); }
  Word operator~() const { return FromRep(~rep_); }
  Word& operator+=(const Word& o) { rep_ += o.rep_; return *this; }
  Word& operator-=(const Word& o) { rep_ -= o.rep_; return *this; }

  friend bool operator==(const Word& a, const Word& b) { return a.rep_ == b.rep_; }
  friend std::strong_ordering operator<=>(const Word& a, const Word& b) {
    if (a.rep_ < b.rep_) return std::strong_ordering::less;
    if (a.rep_ > b.rep_) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
  }

  // True when the exact product exceeds 2^256-1.
  static bool MulOverflows(const Word& a, const Word& b);

 private:
  Word(const Rep& r, int) : rep_(r) {}
  Rep rep_{0};
};

struct Address {
  std::array<uint8_t, 20> bytes{};

  static Address FromHex(std::string_view hex);
  // Low 160 bits of the word.
  static Address FromWord(const Word& w);
  Word ToWord() const { return Word::FromBigEndian(bytes); }
  std::string Hex() const { return ToHex(bytes); }

  friend auto operator<=>(const Address&, const Address&) = default;
};

struct Hash32 {
  std::array<uint8_t, 32> bytes{};

  static Hash32 FromHex(std::string_view hex);
  std::string Hex() const { return ToHex(bytes); }
  bool IsZero() const;

  friend auto operator<=>(const Hash32&, const Hash32&) = default;
};

}  // namespace ctxfuzz
