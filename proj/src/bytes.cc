#include "ctxfuzz/bytes.h"

#include "ctxfuzz/error.h"

namespace ctxfuzz {
namespace {

constexpr char kDigits[] = "0123456789abcdef";

int Nibble(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::string_view StripPrefix(std::string_view s) {
  if (s.size() >= 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) s.remove_prefix(2);
  return s;
}

}  // namespace

std::string ToHex(std::span<const uint8_t> bytes) {
  std::string out = "0x";
  out.reserve(2 + bytes.size() * 2);
  for (uint8_t b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xf]);
  }
  return out;
}

Bytes FromHex(std::string_view hex) {
  std::string_view digits = StripPrefix(hex);
  if (digits.size() % 2 != 0) throw Error(Errc::kBadHex, "odd digit count: " + std::string(hex));
  Bytes out(digits.size() / 2);
  for (size_t i = 0; i < out.size(); ++i) {
    int hi = Nibble(digits[2 * i]);
    int lo = Nibble(digits[2 * i + 1]);
    if (hi < 0 || lo < 0) throw Error(Errc::kBadHex, "bad digit in: " + std::string(hex));
    out[i] = static_cast<uint8_t>(hi << 4 | lo);
  }
  return out;
}

bool IsHexString(std::string_view s) {
  if (s.size() < 2 || s[0] != '0' || (s[1] != 'x' && s[1] != 'X')) return false;
  for (char c : s.substr(2)) {
    if (Nibble(c) < 0) return false;
  }
  return true;
}

}  // namespace ctxfuzz
