#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

namespace ctxfuzz::rpc {

// Value tree for parameters and results. Keeps object key order so the wire
// form is reproducible.
using Json = nlohmann::ordered_json;

namespace code {
inline constexpr int64_t kParseError = -32700;
inline constexpr int64_t kInvalidRequest = -32600;
inline constexpr int64_t kMethodNotFound = -32601;
inline constexpr int64_t kInvalidParams = -32602;
inline constexpr int64_t kInternal = -32603;  // also used for schema violations
inline constexpr int64_t kServer = -32000;
}  // namespace code

struct RpcError {
  int64_t code = 0;
  std::string message;

  friend bool operator==(const RpcError&, const RpcError&) = default;
};

struct RpcCall {
  uint64_t id = 0;
  std::string method;
  Json params = Json::array();

  friend bool operator==(const RpcCall&, const RpcCall&) = default;
};

// Exactly one of result and error is set.
struct RpcResponse {
  std::optional<Json> result;
  std::optional<RpcError> error;
  // Object members that the output schema does not declare, keyed by
  // JSON pointer of the object that carried them.
  Json extras = Json::object();

  static RpcResponse Ok(Json value) {
    RpcResponse r;
    r.result = std::move(value);
    return r;
  }
  static RpcResponse Fail(int64_t code, std::string message) {
    RpcResponse r;
    r.error = RpcError{code, std::move(message)};
    return r;
  }
  bool ok() const { return result.has_value(); }

  friend bool operator==(const RpcResponse&, const RpcResponse&) = default;
};

}  // namespace ctxfuzz::rpc
