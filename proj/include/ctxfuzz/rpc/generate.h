#pragma once

#include <map>
#include <optional>
#include <vector>

#include "ctxfuzz/chain.h"
#include "ctxfuzz/rng.h"
#include "ctxfuzz/rpc/schema.h"
#include "ctxfuzz/rpc/types.h"

namespace ctxfuzz::rpc {

// Read-only snapshot of what the generator may draw from.
struct ContextView {
  uint64_t head_number = 0;
  Word base_fee;
  uint64_t block_gas_limit = 0;
  std::vector<Address> known_addresses;  // funded accounts, then contracts
  std::vector<Transaction> recorded_txs;
  std::map<Address, Word> balances;  // head balances of known addresses

  // `recorded` empty means every contract call on the chain.
  static ContextView FromNetwork(const Network& network,
                                 const std::vector<Transaction>& recorded = {});
};

// [lo, hi); hi absent means unbounded (2^256).
struct Interval {
  Word lo;
  std::optional<Word> hi;

  bool Contains(const Word& w) const { return lo <= w && (!hi || w < *hi); }
  friend bool operator==(const Interval&, const Interval&) = default;
};

// Ordered, disjoint intervals covering [0, 2^256). Bounds that would overflow
// 256 bits are dropped, which merges the last two intervals. `sender_balance`
// is only read for the Value role.
std::vector<Interval> SliceQuantityIntervals(QuantityRole role, const ContextView& ctx,
                                             const Word& sender_balance = Word());

struct GeneratorOptions {
  double reroll = 0.5;         // per numeric field of a TransactionObject
  double include_optional = 0.7;
  double state_override = 0.3;
  double known_address = 0.5;
  double recorded_hash = 0.8;  // TransactionHash drawn from recorded txs
  double sorted_floats = 0.5;  // FloatArray emitted ascending
};

// Uniform interval, then uniform value inside it.
Word SampleQuantity(QuantityRole role, const ContextView& ctx, Rng& rng,
                    const Word& sender_balance = Word());

RpcCall GenerateCall(const MethodSchema& schema, const ContextView& ctx, Rng& rng, uint64_t id,
                     const GeneratorOptions& options = {});

}  // namespace ctxfuzz::rpc
