#pragma once

#include <span>
#include <string_view>

namespace ctxfuzz {

// Data files compiled into the library by CMake.

// src/rpc/methods/*.json, sorted by file name.
std::span<const std::string_view> BuiltinSchemaDocuments();

// rules/default_rules.json.
std::string_view DefaultRulesDocument();

}  // namespace ctxfuzz
