#include "ctxfuzz/client.h"

#include <algorithm>
#include <optional>

#include "ctxfuzz/error.h"
#include "ctxfuzz/opcodes.h"
#include "ctxfuzz/rpc/hexfmt.h"
#include "ctxfuzz/rpc/schema.h"
#include "ctxfuzz/rpc/wire.h"

namespace ctxfuzz {
namespace {

using rpc::Json;
using rpc::RpcResponse;
namespace code = rpc::code;

constexpr uint64_t kMaxFeeHistoryBlocks = 1024;

RpcResponse HeaderNotFound() { return RpcResponse::Fail(code::kServer, "header not found"); }

std::optional<uint64_t> ResolveBlock(const Network& net, const Json& tag) {
  const auto& s = tag.get_ref<const std::string&>();
  if (s == "latest" || s == "pending") return net.head_number();
  if (s == "earliest") return 0;
  Word n = Word::FromHex(s);
  if (!n.FitsU64() || n.Low64() > net.head_number()) return std::nullopt;
  return n.Low64();
}

Json TransactionJson(const Network& net, const TxLocation& loc) {
  const Block& b = net.blocks()[loc.block];
  const Transaction& tx = b.transactions[loc.index];
  Json j = Json::object();
  j["blockHash"] = b.hash.Hex();
  j["blockNumber"] = rpc::QuantityJson(loc.block);
  j["from"] = tx.from.Hex();
  j["gas"] = rpc::QuantityJson(tx.gas_limit);
  j["hash"] = tx.Hash().Hex();
  j["input"] = ToHex(tx.data);
  j["maxFeePerGas"] = rpc::QuantityJson(tx.max_fee_per_gas);
  j["nonce"] = rpc::QuantityJson(tx.nonce);
  j["to"] = tx.to ? Json(tx.to->Hex()) : Json();
  j["transactionIndex"] = rpc::QuantityJson(loc.index);
  j["value"] = rpc::QuantityJson(tx.value);
  return j;
}

Json BlockJson(const Network& net, uint64_t number, bool full) {
  const Block& b = net.blocks()[number];
  Json j = Json::object();
  j["number"] = rpc::QuantityJson(number);
  j["hash"] = b.hash.Hex();
  j["parentHash"] = b.context.parent_hash.Hex();
  j["timestamp"] = rpc::QuantityJson(b.context.timestamp);
  j["baseFeePerGas"] = rpc::QuantityJson(b.context.base_fee);
  j["gasLimit"] = rpc::QuantityJson(b.context.gas_limit);
  j["gasUsed"] = rpc::QuantityJson(b.gas_used);
  Json txs = Json::array();
  for (uint32_t i = 0; i < b.transactions.size(); ++i) {
    if (full) {
      txs.push_back(TransactionJson(net, {number, i}));
    } else {
      txs.push_back(b.transactions[i].Hash().Hex());
    }
  }
  j["transactions"] = std::move(txs);
  return j;
}

struct CallArgs {
  Address from;
  std::optional<Address> to;
  std::optional<Word> gas;
  std::optional<Word> max_fee;
  Word value;
  Bytes data;
};

CallArgs ParseCallArgs(const Json& obj) {
  CallArgs a;
  if (obj.contains("from") && !obj["from"].is_null()) a.from = *rpc::ParseAddress(obj["from"]);
  if (obj.contains("to") && !obj["to"].is_null()) a.to = rpc::ParseAddress(obj["to"]);
  if (obj.contains("gas")) a.gas = rpc::ParseQuantity(obj["gas"]);
  if (obj.contains("maxFeePerGas")) a.max_fee = rpc::ParseQuantity(obj["maxFeePerGas"]);
  if (obj.contains("value")) a.value = *rpc::ParseQuantity(obj["value"]);
  if (obj.contains("input")) {
    a.data = *rpc::ParseData(obj["input"]);
  } else if (obj.contains("data")) {
    a.data = *rpc::ParseData(obj["data"]);
  }
  return a;
}

void ApplyOverrides(OverlayView& view, const Json& overrides) {
  for (const auto& [addr_hex, entry] : overrides.items()) {
    Account& acct = view.Mutable(Address::FromHex(addr_hex));
    if (entry.contains("balance")) acct.balance = *rpc::ParseQuantity(entry["balance"]);
    if (entry.contains("nonce")) {
      Word n = *rpc::ParseQuantity(entry["nonce"]);
      acct.nonce = n.Low64();
    }
    if (entry.contains("code")) acct.code.bytes = *rpc::ParseData(entry["code"]);
    if (entry.contains("state")) {
      acct.storage.clear();
      for (const auto& [slot, value] : entry["state"].items()) {
        Word v = Word::FromHex(value.get<std::string>());
        if (!v.IsZero()) acct.storage[Word::FromHex(slot)] = v;
      }
    }
  }
}

// Shared pre-checks of eth_call and eth_estimateGas. Returns an error
// response when the call is rejected before execution.
std::optional<RpcResponse> CheckCall(const CallArgs& args, uint64_t gas,
                                     const std::optional<Word>& max_fee, const StateView& view,
                                     const BlockContext& block) {
  if (max_fee && *max_fee < block.base_fee) {
    return RpcResponse::Fail(code::kServer, "max fee per gas less than block base fee");
  }
  Word need = args.value;
  if (max_fee) {
    if (Word::MulOverflows(Word(gas), *max_fee)) {
      return RpcResponse::Fail(code::kServer, "insufficient funds for gas * price + value");
    }
    Word fee = Word(gas) * *max_fee;
    need = fee + args.value;
    if (need < fee) return RpcResponse::Fail(code::kServer, "insufficient funds for gas * price + value");
  }
  if (view.Balance(args.from) < need) {
    return RpcResponse::Fail(code::kServer, "insufficient funds for gas * price + value");
  }
  if (gas < gas::kTransaction) return RpcResponse::Fail(code::kServer, "intrinsic gas too low");
  return std::nullopt;
}

ExecResult RunCall(const CallArgs& args, uint64_t gas, const StateView& view,
                   const BlockContext& block) {
  ExecContext ctx;
  ctx.caller = args.from;
  ctx.callee = *args.to;
  ctx.call_value = args.value;
  ctx.call_data = args.data;
  ctx.block = block;
  ctx.gas_limit = gas - gas::kTransaction;
  ctx.allow_gas_above_block_limit = true;
  return Execute(view.Code(*args.to), ctx, view);
}

RpcResponse ExecutionError(const ExecResult& r) {
  if (r.halt == HaltKind::kRevert) return RpcResponse::Fail(code::kServer, "execution reverted");
  return RpcResponse::Fail(code::kServer,
                           "execution failed: " + std::string(HaltName(r.halt)));
}

RpcResponse EthCall(const Network& net, const Json& params, const HandlerOptions& opts) {
  auto n = ResolveBlock(net, params[1]);
  if (!n) return HeaderNotFound();
  const BlockContext& block = net.blocks()[*n].context;
  HistoricalView base = net.StateAt(*n);
  OverlayView view(base);
  if (params.size() > 2) ApplyOverrides(view, params[2]);
  CallArgs args = ParseCallArgs(params[0]);

  uint64_t cap = opts.call_gas_cap != 0 ? opts.call_gas_cap : block.gas_limit;
  Word gas = args.gas.value_or(Word(cap));
  if (gas > Word(cap)) {
    return RpcResponse::Fail(code::kServer, "gas limit exceeds allowance " + std::to_string(cap));
  }
  if (auto err = CheckCall(args, gas.Low64(), args.max_fee, view, block)) return *err;
  if (!args.to) return RpcResponse::Ok("0x");
  ExecResult r = RunCall(args, gas.Low64(), view, block);
  if (!IsSuccess(r.halt)) return ExecutionError(r);
  return RpcResponse::Ok(ToHex(r.return_data));
}

RpcResponse EstimateGas(const Network& net, const Json& params, const HandlerOptions& opts) {
  std::optional<uint64_t> n = net.head_number();
  if (params.size() > 1) n = ResolveBlock(net, params[1]);
  if (!n) return HeaderNotFound();
  const BlockContext& block = net.blocks()[*n].context;
  HistoricalView base = net.StateAt(*n);
  OverlayView view(base);
  if (params.size() > 2) ApplyOverrides(view, params[2]);
  CallArgs args = ParseCallArgs(params[0]);

  uint64_t cap = block.gas_limit;
  uint64_t gas = args.gas && *args.gas < Word(cap) ? args.gas->Low64() : cap;
  std::optional<Word> max_fee = opts.estimate_ignores_fee ? std::nullopt : args.max_fee;
  if (auto err = CheckCall(args, gas, max_fee, view, block)) return *err;
  if (!args.to) return RpcResponse::Ok(rpc::QuantityJson(gas::kTransaction));
  ExecResult r = RunCall(args, gas, view, block);
  if (r.halt == HaltKind::kRevert) return RpcResponse::Fail(code::kServer, "execution reverted");
  if (!IsSuccess(r.halt)) {
    return RpcResponse::Fail(code::kServer,
                             "gas required exceeds allowance (" + std::string(HaltName(r.halt)) + ")");
  }
  return RpcResponse::Ok(rpc::QuantityJson(gas::kTransaction + r.gas_used));
}

RpcResponse FeeHistory(const Network& net, const Json& params) {
  Word count_word = *rpc::ParseQuantity(params[0]);
  auto newest = ResolveBlock(net, params[1]);
  if (!newest) return HeaderNotFound();
  std::vector<double> percentiles;
  bool with_reward = params.size() > 2;
  if (with_reward) {
    for (const auto& p : params[2]) {
      double v = p.get<double>();
      if (v < 0 || v > 100 || (!percentiles.empty() && v < percentiles.back())) {
        return RpcResponse::Fail(code::kInvalidParams, "invalid reward percentile");
      }
      percentiles.push_back(v);
    }
  }
  uint64_t count = count_word.FitsU64() ? count_word.Low64() : UINT64_MAX;
  count = std::min({count, kMaxFeeHistoryBlocks, *newest + 1});

  Json out = Json::object();
  Json base_fees = Json::array();
  Json ratios = Json::array();
  Json rewards = Json::array();
  uint64_t oldest = count == 0 ? 0 : *newest + 1 - count;
  for (uint64_t b = oldest; count > 0 && b <= *newest; ++b) {
    const Block& blk = net.blocks()[b];
    base_fees.push_back(rpc::QuantityJson(blk.context.base_fee));
    ratios.push_back(static_cast<double>(blk.gas_used) / static_cast<double>(blk.context.gas_limit));
    if (with_reward) {
      Word tip;
      if (!blk.transactions.empty() &&
          blk.transactions[0].max_fee_per_gas > blk.context.base_fee) {
        tip = blk.transactions[0].max_fee_per_gas - blk.context.base_fee;
      }
      Json row = Json::array();
      for (size_t i = 0; i < percentiles.size(); ++i) row.push_back(rpc::QuantityJson(tip));
      rewards.push_back(std::move(row));
    }
  }
  if (count > 0) {
    const Word next = *newest == net.head_number() ? net.NextBlockContext().base_fee
                                                  : net.blocks()[*newest + 1].context.base_fee;
    base_fees.push_back(rpc::QuantityJson(next));
  }
  out["oldestBlock"] = rpc::QuantityJson(oldest);
  out["baseFeePerGas"] = std::move(base_fees);
  out["gasUsedRatio"] = std::move(ratios);
  if (with_reward) out["reward"] = std::move(rewards);
  return RpcResponse::Ok(std::move(out));
}

RpcResponse TraceTransaction(const Network& net, const Json& params) {
  Hash32 hash = *rpc::ParseHash(params[0]);
  auto loc = net.FindTransaction(hash);
  if (!loc) return RpcResponse::Fail(code::kServer, "transaction " + hash.Hex() + " not found");
  const Block& b = net.blocks()[loc->block];
  HistoricalView pre = net.StateAt(loc->block - 1);
  TxOutcome out = ProcessTransaction(pre, b.transactions[loc->index], b.context);

  Json logs = Json::array();
  for (const TraceStep& s : out.exec.trace.steps) {
    Json step = Json::object();
    step["pc"] = s.pc;
    step["op"] = op::Mnemonic(s.opcode);
    step["gas"] = s.gas_before;
    step["gasCost"] = s.gas_cost;
    step["depth"] = s.depth + 1;
    Json stack = Json::array();
    for (const Word& w : s.stack_top) stack.push_back(w.Hex());
    step["stack"] = std::move(stack);
    logs.push_back(std::move(step));
  }
  Json j = Json::object();
  j["gasUsed"] = out.receipt.gas_used;
  j["failed"] = out.receipt.status == TxStatus::kFailed;
  j["structLogs"] = std::move(logs);
  return RpcResponse::Ok(std::move(j));
}

void NullEmptyCode(const rpc::RpcCall& call, RpcResponse& r) {
  if (call.method == "eth_getCode" && r.result && *r.result == "0x") *r.result = Json();
}

void WrongSstoreCost(const rpc::RpcCall& call, RpcResponse& r) {
  if (call.method != "debug_traceTransaction" || !r.result) return;
  for (auto& step : (*r.result)["structLogs"]) {
    if (step["op"] == "SSTORE") step["gasCost"] = 20000;
  }
}

// The value BASEFEE pushed shows up as the top of the following step's stack.
void WrongBasefee(const rpc::RpcCall& call, RpcResponse& r) {
  if (call.method != "debug_traceTransaction" || !r.result) return;
  auto& logs = (*r.result)["structLogs"];
  for (size_t i = 1; i < logs.size(); ++i) {
    if (logs[i - 1]["op"] == "BASEFEE" && logs[i - 1]["depth"] == logs[i]["depth"] &&
        !logs[i]["stack"].empty()) {
      logs[i]["stack"][0] = "0x0";
    }
  }
}

}  // namespace

RpcResponse ReferenceResponse(const Network& net, const rpc::RpcCall& call,
                              const HandlerOptions& opts) {
  const rpc::MethodSchema* schema = rpc::SchemaRegistry::Builtin().Find(call.method);
  if (schema == nullptr) {
    return RpcResponse::Fail(code::kMethodNotFound, "the method " + call.method + " does not exist");
  }
  std::string why;
  if (!rpc::ValidateParams(*schema, call.params, &why)) {
    return RpcResponse::Fail(code::kInvalidParams, "invalid params: " + why);
  }
  const Json& p = call.params;
  const std::string& m = call.method;

  if (m == "eth_getBalance" || m == "eth_getCode") {
    auto n = ResolveBlock(net, p[1]);
    if (!n) return HeaderNotFound();
    HistoricalView view = net.StateAt(*n);
    Address a = *rpc::ParseAddress(p[0]);
    if (m == "eth_getBalance") return RpcResponse::Ok(rpc::QuantityJson(view.Balance(a)));
    return RpcResponse::Ok(view.Code(a).Hex());
  }
  if (m == "eth_getStorageAt") {
    auto n = ResolveBlock(net, p[2]);
    if (!n) return HeaderNotFound();
    Word v = net.StateAt(*n).Storage(*rpc::ParseAddress(p[0]), *rpc::ParseQuantity(p[1]));
    return RpcResponse::Ok(ToHex(v.ToBigEndian()));
  }
  if (m == "eth_getBlockByNumber") {
    auto n = ResolveBlock(net, p[0]);
    if (!n) return RpcResponse::Ok(Json());
    return RpcResponse::Ok(BlockJson(net, *n, p[1].get<bool>()));
  }
  if (m == "eth_getTransactionByHash") {
    auto loc = net.FindTransaction(*rpc::ParseHash(p[0]));
    if (!loc) return RpcResponse::Ok(Json());
    return RpcResponse::Ok(TransactionJson(net, *loc));
  }
  if (m == "eth_getTransactionByBlockNumberAndIndex") {
    auto n = ResolveBlock(net, p[0]);
    if (!n) return RpcResponse::Ok(Json());
    Word index = *rpc::ParseQuantity(p[1]) + Word(opts.index_offset);
    const auto& txs = net.blocks()[*n].transactions;
    if (!index.FitsU64() || index.Low64() >= txs.size()) return RpcResponse::Ok(Json());
    return RpcResponse::Ok(TransactionJson(net, {*n, static_cast<uint32_t>(index.Low64())}));
  }
  if (m == "eth_call") return EthCall(net, p, opts);
  if (m == "eth_estimateGas") return EstimateGas(net, p, opts);
  if (m == "eth_feeHistory") return FeeHistory(net, p);
  if (m == "debug_traceTransaction") return TraceTransaction(net, p);
  return RpcResponse::Fail(code::kMethodNotFound, "the method " + m + " does not exist");
}

RpcResponse Dispatch(const ClientHandle& client, const Network& network, const rpc::RpcCall& call) {
  HandlerOptions opts;
  for (const FaultSpec& f : client.faults) {
    switch (f.id) {
      case FaultId::kUnlimitedEthCallGas: opts.call_gas_cap = kUnlimitedGasCap; break;
      case FaultId::kEstimateIgnoresFeeParam: opts.estimate_ignores_fee = true; break;
      case FaultId::kTxIndexOffByOne: opts.index_offset = 1; break;
      default: break;
    }
  }
  RpcResponse r = ReferenceResponse(network, call, opts);
  for (const FaultSpec& f : client.faults) {
    switch (f.id) {
      case FaultId::kNullEmptyCode: NullEmptyCode(call, r); break;
      case FaultId::kTraceWrongGasCost: WrongSstoreCost(call, r); break;
      case FaultId::kTraceWrongBasefee: WrongBasefee(call, r); break;
      default: break;
    }
  }
  return r;
}

std::string DispatchWire(const ClientHandle& client, const Network& network,
                         std::string_view request) {
  rpc::RpcCall call;
  try {
    call = rpc::ParseRequest(request);
  } catch (const Error& e) {
    return rpc::SerializeResponse(0, RpcResponse::Fail(code::kInvalidRequest, e.what()));
  }
  return rpc::SerializeResponse(call.id, Dispatch(client, network, call));
}

}  // namespace ctxfuzz
