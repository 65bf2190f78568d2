#include "ctxfuzz/rpc/generate.h"

#include <algorithm>
#include <cmath>

#include "ctxfuzz/rpc/hexfmt.h"

namespace ctxfuzz::rpc {
namespace {

// 1000 units of 10^18, the scale of genesis funding.
const Word kMaxOverrideBalance = Word(1'000'000'000'000'000'000ULL) * Word(1000);

// Adds k * w to `points` unless it overflows.
void AddScaled(std::vector<Word>& points, const Word& w, uint64_t k) {
  if (!Word::MulOverflows(w, Word(k))) points.push_back(w * Word(k));
}

Address RandomAddress(Rng& rng) {
  Address a;
  Bytes b = rng.RandomBytes(20);
  std::copy(b.begin(), b.end(), a.bytes.begin());
  return a;
}

Json BlockTag(const ContextView& ctx, Rng& rng) {
  std::vector<Json> tags = {QuantityJson(ctx.head_number)};
  if (ctx.head_number >= 1) tags.push_back(QuantityJson(ctx.head_number - 1));
  tags.push_back(QuantityJson(uint64_t{0}));
  tags.push_back(QuantityJson(ctx.head_number + 10));
  tags.push_back("latest");
  tags.push_back("earliest");
  tags.push_back("pending");
  return tags[rng.Below(tags.size())];
}

Address PickAddress(const ContextView& ctx, Rng& rng, const GeneratorOptions& opts) {
  if (!ctx.known_addresses.empty() && rng.Chance(opts.known_address)) {
    return ctx.known_addresses[rng.Below(ctx.known_addresses.size())];
  }
  return RandomAddress(rng);
}

Word BalanceOf(const ContextView& ctx, const Address& a) {
  auto it = ctx.balances.find(a);
  return it == ctx.balances.end() ? Word() : it->second;
}

Json TransactionObject(const ContextView& ctx, Rng& rng, const GeneratorOptions& opts) {
  Json j = Json::object();
  if (ctx.recorded_txs.empty()) {
    Address from = PickAddress(ctx, rng, opts);
    j["from"] = from.Hex();
    j["to"] = PickAddress(ctx, rng, opts).Hex();
    j["gas"] = QuantityJson(SampleQuantity(QuantityRole::kGas, ctx, rng));
    j["maxFeePerGas"] = QuantityJson(SampleQuantity(QuantityRole::kFee, ctx, rng));
    j["value"] = QuantityJson(SampleQuantity(QuantityRole::kValue, ctx, rng, BalanceOf(ctx, from)));
    j["input"] = "0x";
    return j;
  }
  const Transaction& base = ctx.recorded_txs[rng.Below(ctx.recorded_txs.size())];
  Word gas = Word(base.gas_limit);
  Word fee = base.max_fee_per_gas;
  Word value = base.value;
  if (rng.Chance(opts.reroll)) gas = SampleQuantity(QuantityRole::kGas, ctx, rng);
  if (rng.Chance(opts.reroll)) fee = SampleQuantity(QuantityRole::kFee, ctx, rng);
  if (rng.Chance(opts.reroll)) {
    value = SampleQuantity(QuantityRole::kValue, ctx, rng, BalanceOf(ctx, base.from));
  }
  j["from"] = base.from.Hex();
  j["to"] = base.to ? Json(base.to->Hex()) : Json();
  j["gas"] = QuantityJson(gas);
  j["maxFeePerGas"] = QuantityJson(fee);
  j["value"] = QuantityJson(value);
  j["input"] = ToHex(base.data);
  return j;
}

Json StateOverride(const ContextView& ctx, Rng& rng, const GeneratorOptions& opts) {
  Json j = Json::object();
  if (ctx.known_addresses.empty() || !rng.Chance(opts.state_override)) return j;
  const Address& a = ctx.known_addresses[rng.Below(ctx.known_addresses.size())];
  Json entry = Json::object();
  uint64_t which = rng.Range(1, 3);  // bit 0: balance, bit 1: code
  if (which & 1) entry["balance"] = QuantityJson(rng.WordBelow(kMaxOverrideBalance));
  if (which & 2) entry["code"] = ToHex(rng.RandomBytes(rng.Below(65)));
  j[a.Hex()] = std::move(entry);
  return j;
}

Json FloatArray(Rng& rng, const GeneratorOptions& opts) {
  std::vector<double> v(rng.Below(9));
  for (double& x : v) x = std::round(rng.Unit() * 100.0 * 100.0) / 100.0;
  if (rng.Chance(opts.sorted_floats)) std::sort(v.begin(), v.end());
  Json j = Json::array();
  for (double x : v) j.push_back(x);
  return j;
}

Json TransactionHash(const ContextView& ctx, Rng& rng, const GeneratorOptions& opts) {
  if (!ctx.recorded_txs.empty() && rng.Chance(opts.recorded_hash)) {
    return ctx.recorded_txs[rng.Below(ctx.recorded_txs.size())].Hash().Hex();
  }
  Hash32 h;
  Bytes b = rng.RandomBytes(32);
  std::copy(b.begin(), b.end(), h.bytes.begin());
  return h.Hex();
}

Json GenerateParam(const ParamKind& kind, const ContextView& ctx, Rng& rng,
                   const GeneratorOptions& opts) {
  switch (kind.kind) {
    case ParamKind::kQuantity: {
      Word balance = ctx.balances.empty() ? Word() : ctx.balances.begin()->second;
      return QuantityJson(SampleQuantity(kind.role, ctx, rng, balance));
    }
    case ParamKind::kAddress: return PickAddress(ctx, rng, opts).Hex();
    case ParamKind::kDataBytes: return ToHex(rng.RandomBytes(rng.Below(257)));
    case ParamKind::kBoolean: return rng.Chance(0.5);
    case ParamKind::kBlockTag: return BlockTag(ctx, rng);
    case ParamKind::kTransactionObject: return TransactionObject(ctx, rng, opts);
    case ParamKind::kStateOverride: return StateOverride(ctx, rng, opts);
    case ParamKind::kFloatArray: return FloatArray(rng, opts);
    case ParamKind::kTransactionHash: return TransactionHash(ctx, rng, opts);
  }
  return Json();
}

}  // namespace

ContextView ContextView::FromNetwork(const Network& network,
                                     const std::vector<Transaction>& recorded) {
  ContextView v;
  v.head_number = network.head_number();
  v.base_fee = network.NextBlockContext().base_fee;
  v.block_gas_limit = network.head().context.gas_limit;
  v.known_addresses = network.funded_accounts();
  for (const Address& c : network.contracts()) v.known_addresses.push_back(c);
  for (const Address& a : v.known_addresses) v.balances[a] = network.world().Balance(a);
  if (!recorded.empty()) {
    v.recorded_txs = recorded;
  } else {
    for (const Block& b : network.blocks()) {
      for (const Transaction& tx : b.transactions) {
        if (tx.to) v.recorded_txs.push_back(tx);
      }
    }
  }
  return v;
}

std::vector<Interval> SliceQuantityIntervals(QuantityRole role, const ContextView& ctx,
                                             const Word& sender_balance) {
  std::vector<Word> points = {Word(0)};
  switch (role) {
    case QuantityRole::kFee:
      points.push_back(ctx.base_fee);
      AddScaled(points, ctx.base_fee, 10);
      break;
    case QuantityRole::kGas:
      points.push_back(Word(21000));
      points.push_back(Word(ctx.block_gas_limit));
      AddScaled(points, Word(ctx.block_gas_limit), 10);
      break;
    case QuantityRole::kValue:
      points.push_back(Word(1));
      points.push_back(sender_balance);
      break;
    case QuantityRole::kIndex:
      // [0, head] inclusive, then everything above it.
      points.push_back(Word(ctx.head_number) + Word(1));
      break;
    case QuantityRole::kGeneric:
      break;
  }
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  std::vector<Interval> out;
  for (size_t i = 0; i < points.size(); ++i) {
    Interval iv{points[i], std::nullopt};
    if (i + 1 < points.size()) iv.hi = points[i + 1];
    out.push_back(iv);
  }
  return out;
}

Word SampleQuantity(QuantityRole role, const ContextView& ctx, Rng& rng,
                    const Word& sender_balance) {
  auto intervals = SliceQuantityIntervals(role, ctx, sender_balance);
  const Interval& iv = intervals[rng.Below(intervals.size())];
  return iv.hi ? rng.WordRange(iv.lo, *iv.hi) : rng.WordAtLeast(iv.lo);
}

RpcCall GenerateCall(const MethodSchema& schema, const ContextView& ctx, Rng& rng, uint64_t id,
                     const GeneratorOptions& opts) {
  RpcCall call;
  call.id = id;
  call.method = schema.name;
  for (const ParamSpec& p : schema.params) {
    if (p.optional && !rng.Chance(opts.include_optional)) break;
    call.params.push_back(GenerateParam(p.kind, ctx, rng, opts));
  }
  return call;
}

}  // namespace ctxfuzz::rpc
