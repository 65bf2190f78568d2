#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ctxfuzz {

using Bytes = std::vector<uint8_t>;

// "0x" followed by two lowercase hex digits per byte; empty input gives "0x".
std::string ToHex(std::span<const uint8_t> bytes);

// Accepts an optional 0x/0X prefix and either case. Odd digit counts are
// rejected. Throws Error(kBadHex).
Bytes FromHex(std::string_view hex);

bool IsHexString(std::string_view s);

}  // namespace ctxfuzz
