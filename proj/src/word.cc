#include "ctxfuzz/word.h"

#include <algorithm>

#include "ctxfuzz/error.h"

namespace ctxfuzz {

using boost::multiprecision::cpp_int;

Word Word::FromBigEndian(std::span<const uint8_t> bytes) {
  if (bytes.size() > 32) bytes = bytes.last(32);
  Rep r = 0;
  for (uint8_t b : bytes) r = (r << 8) | b;
  return FromRep(r);
}

Word Word::FromHex(std::string_view hex) {
  std::string_view digits = hex;
  if (digits.size() >= 2 && digits[0] == '0' && (digits[1] == 'x' || digits[1] == 'X')) {
    digits.remove_prefix(2);
  }
  if (digits.empty() || digits.size() > 64) {
    throw Error(Errc::kBadHex, "bad quantity: " + std::string(hex));
  }
  Rep r = 0;
  for (char c : digits) {
    int v;
    if (c >= '0' && c <= '9') v = c - '0';
    else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') v = c - 'A' + 10;
    else throw Error(Errc::kBadHex, "bad quantity: " + std::string(hex));
    r = (r << 4) | v;
  }
  return FromRep(r);
}

std::array<uint8_t, 32> Word::ToBigEndian() const {
  std::array<uint8_t, 32> out{};
  Rep r = rep_;
  for (int i = 31; i >= 0; --i) {
    out[i] = static_cast<uint8_t>(r & 0xff);
    r >>= 8;
  }
  return out;
}

std::string Word::Hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  if (IsZero()) return "0x0";
  auto be = ToBigEndian();
  std::string out;
  for (uint8_t b : be) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xf]);
  }
  size_t first = out.find_first_not_of('0');
  return "0x" + out.substr(first);
}

std::string Word::Decimal() const { return rep_.str(); }

unsigned Word::BitLength() const {
  if (IsZero()) return 0;
  return static_cast<unsigned>(boost::multiprecision::msb(rep_)) + 1;
}

bool Word::MulOverflows(const Word& a, const Word& b) {
  cpp_int wide = cpp_int(a.rep_) * cpp_int(b.rep_);
  return wide > cpp_int(Max().rep_);
}

Address Address::FromHex(std::string_view hex) {
  Bytes raw = ctxfuzz::FromHex(hex);
  if (raw.size() != 20) throw Error(Errc::kBadHex, "address must be 20 bytes: " + std::string(hex));
  Address a;
  std::copy(raw.begin(), raw.end(), a.bytes.begin());
  return a;
}

Address Address::FromWord(const Word& w) {
  auto be = w.ToBigEndian();
  Address a;
  std::copy(be.begin() + 12, be.end(), a.bytes.begin());
  return a;
}

Hash32 Hash32::FromHex(std::string_view hex) {
  Bytes raw = ctxfuzz::FromHex(hex);
  if (raw.size() != 32) throw Error(Errc::kBadHex, "hash must be 32 bytes: " + std::string(hex));
  Hash32 h;
  std::copy(raw.begin(), raw.end(), h.bytes.begin());
  return h;
}

bool Hash32::IsZero() const {
  return std::all_of(bytes.begin(), bytes.end(), [](uint8_t b) { return b == 0; });
}

}  // namespace ctxfuzz
