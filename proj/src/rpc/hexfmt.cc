#include "ctxfuzz/rpc/hexfmt.h"

#include <cctype>

#include "ctxfuzz/error.h"

namespace ctxfuzz::rpc {
namespace {

bool HexDigits(std::string_view s) {
  for (char c : s) {
    if (!std::isxdigit(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

bool HasPrefix(std::string_view s) { return s.size() >= 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X'); }

}  // namespace

bool IsQuantity(std::string_view s) {
  return HasPrefix(s) && s.size() > 2 && s.size() <= 66 && HexDigits(s.substr(2));
}

bool IsData(std::string_view s) { return HasPrefix(s) && s.size() % 2 == 0 && HexDigits(s.substr(2)); }

bool IsAddress(std::string_view s) { return IsData(s) && s.size() == 42; }

bool IsHash(std::string_view s) { return IsData(s) && s.size() == 66; }

std::optional<Word> ParseQuantity(const Json& v) {
  if (!v.is_string()) return std::nullopt;
  const auto& s = v.get_ref<const std::string&>();
  if (!IsQuantity(s)) return std::nullopt;
  return Word::FromHex(s);
}

std::optional<Address> ParseAddress(const Json& v) {
  if (!v.is_string() || !IsAddress(v.get_ref<const std::string&>())) return std::nullopt;
  return Address::FromHex(v.get_ref<const std::string&>());
}

std::optional<Hash32> ParseHash(const Json& v) {
  if (!v.is_string() || !IsHash(v.get_ref<const std::string&>())) return std::nullopt;
  return Hash32::FromHex(v.get_ref<const std::string&>());
}

std::optional<Bytes> ParseData(const Json& v) {
  if (!v.is_string() || !IsData(v.get_ref<const std::string&>())) return std::nullopt;
  return FromHex(v.get_ref<const std::string&>());
}

}  // namespace ctxfuzz::rpc
