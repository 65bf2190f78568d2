#pragma once

#include <string>
#include <string_view>

#include "ctxfuzz/rpc/schema.h"
#include "ctxfuzz/rpc/types.h"

namespace ctxfuzz::rpc {

// {"jsonrpc":"2.0","id":<id>,"method":<name>,"params":[...]}, compact, with
// the key order shown.
std::string AssembleRequest(const RpcCall& call);
// Inverse of AssembleRequest. Throws Error(kBadRequest).
RpcCall ParseRequest(std::string_view bytes);

std::string SerializeResponse(uint64_t id, const RpcResponse& response);

// Never throws: malformed JSON becomes a -32700 error response and a result
// that does not fit the schema becomes a -32603 error response, so a broken
// reply still takes part in the comparison.
RpcResponse ParseResponse(const OutputSchema& schema, std::string_view bytes);

}  // namespace ctxfuzz::rpc
