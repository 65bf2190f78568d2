#pragma once

#include <optional>
#include <string_view>

#include "ctxfuzz/rpc/types.h"
#include "ctxfuzz/word.h"

namespace ctxfuzz::rpc {

// "0x" + 1..64 hex digits (leading zeros tolerated on input).
bool IsQuantity(std::string_view s);
// "0x" + an even number of hex digits.
bool IsData(std::string_view s);
bool IsAddress(std::string_view s);  // exactly 20 bytes
bool IsHash(std::string_view s);     // exactly 32 bytes

std::optional<Word> ParseQuantity(const Json& v);
std::optional<Address> ParseAddress(const Json& v);
std::optional<Hash32> ParseHash(const Json& v);
std::optional<Bytes> ParseData(const Json& v);

inline Json QuantityJson(const Word& w) { return w.Hex(); }
inline Json QuantityJson(uint64_t v) { return Word(v).Hex(); }

}  // namespace ctxfuzz::rpc
