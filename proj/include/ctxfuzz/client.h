#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "ctxfuzz/chain.h"
#include "ctxfuzz/rpc/types.h"

namespace ctxfuzz {

// Knobs of the reference handlers that faults F1, F3 and F6 turn.
struct HandlerOptions {
  uint64_t call_gas_cap = 0;  // eth_call gas cap; 0 means the block gas limit
  bool estimate_ignores_fee = false;
  uint64_t index_offset = 0;  // added to the eth_getTransactionByBlockNumberAndIndex index
};

inline constexpr uint64_t kUnlimitedGasCap = (uint64_t{1} << 63) - 1;

// The correct answer to `call`, computed from the canonical chain only.
rpc::RpcResponse ReferenceResponse(const Network& network, const rpc::RpcCall& call,
                                   const HandlerOptions& options = {});

// Reference response with the client's faults applied in order. Unknown
// methods yield a -32601 error response; the network is never modified.
rpc::RpcResponse Dispatch(const ClientHandle& client, const Network& network,
                          const rpc::RpcCall& call);

// Same as Dispatch over the wire format: request bytes in, response bytes out.
std::string DispatchWire(const ClientHandle& client, const Network& network,
                         std::string_view request);

}  // namespace ctxfuzz
