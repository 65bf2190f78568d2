#pragma once

#include <span>

#include "ctxfuzz/word.h"

namespace ctxfuzz {

// Keccak-256 as used by Ethereum (original 0x01 padding, not SHA3-256).
Hash32 Keccak256(std::span<const uint8_t> data);

}  // namespace ctxfuzz
