#include "ctxfuzz/chain.h"

#include <algorithm>
#include <array>
#include <set>
#include <utility>

#include "ctxfuzz/error.h"
#include "ctxfuzz/keccak.h"

namespace ctxfuzz {
namespace {

void AppendU64(Bytes& out, uint64_t v) {
  for (int i = 7; i >= 0; --i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void AppendWord(Bytes& out, const Word& w) {
  auto be = w.ToBigEndian();
  out.insert(out.end(), be.begin(), be.end());
}

template <size_t N>
void AppendArray(Bytes& out, const std::array<uint8_t, N>& a) {
  out.insert(out.end(), a.begin(), a.end());
}

Hash32 HashBlock(const BlockContext& ctx, const std::vector<Transaction>& txs, uint64_t gas_used,
                 const Hash32& state_hash) {
  Bytes enc;
  AppendU64(enc, ctx.number);
  AppendU64(enc, ctx.timestamp);
  AppendWord(enc, ctx.base_fee);
  AppendU64(enc, ctx.gas_limit);
  AppendArray(enc, ctx.parent_hash.bytes);
  AppendU64(enc, gas_used);
  AppendArray(enc, state_hash.bytes);
  for (const auto& tx : txs) AppendArray(enc, tx.Hash().bytes);
  return Keccak256(enc);
}

struct FaultNames {
  FaultId id;
  std::string_view short_name;
  std::string_view long_name;
};

constexpr std::array<FaultNames, kFaultCount> kFaultNames = {{
    {FaultId::kUnlimitedEthCallGas, "F1", "F1_UnlimitedEthCallGas"},
    {FaultId::kNullEmptyCode, "F2", "F2_NullEmptyCode"},
    {FaultId::kEstimateIgnoresFeeParam, "F3", "F3_EstimateIgnoresFeeParam"},
    {FaultId::kTraceWrongGasCost, "F4", "F4_TraceWrongGasCost"},
    {FaultId::kTraceWrongBasefee, "F5", "F5_TraceWrongBasefee"},
    {FaultId::kTxIndexOffByOne, "F6", "F6_TxIndexOffByOne"},
}};

}  // namespace

Hash32 Transaction::Hash() const {
  Bytes enc;
  AppendArray(enc, from.bytes);
  enc.push_back(to.has_value() ? 1 : 0);
  AppendArray(enc, to.value_or(Address()).bytes);
  AppendWord(enc, value);
  AppendU64(enc, data.size());
  enc.insert(enc.end(), data.begin(), data.end());
  AppendU64(enc, gas_limit);
  AppendWord(enc, max_fee_per_gas);
  AppendU64(enc, nonce);
  return Keccak256(enc);
}

Address ContractAddress(const Address& deployer, uint64_t nonce) {
  Bytes enc;
  AppendArray(enc, deployer.bytes);
  AppendU64(enc, nonce);
  Hash32 h = Keccak256(enc);
  Address a;
  std::copy(h.bytes.begin() + 12, h.bytes.end(), a.bytes.begin());
  return a;
}

std::string_view FaultShortName(FaultId id) { return kFaultNames[static_cast<int>(id)].short_name; }
std::string_view FaultLongName(FaultId id) { return kFaultNames[static_cast<int>(id)].long_name; }

FaultId ParseFault(std::string_view name) {
  for (const auto& f : kFaultNames) {
    if (name == f.short_name || name == f.long_name) return f.id;
  }
  throw Error(Errc::kConfigInvalid, "unknown fault '" + std::string(name) + "'");
}

bool ClientHandle::HasFault(FaultId f) const {
  return std::any_of(faults.begin(), faults.end(), [f](const FaultSpec& s) { return s.id == f; });
}

ClientHandle ParseClientSpec(std::string_view text) {
  ClientHandle c;
  size_t colon = text.find(':');
  c.id = std::string(text.substr(0, colon));
  if (c.id.empty()) throw Error(Errc::kConfigInvalid, "empty client id");
  if (colon == std::string_view::npos) return c;
  std::string_view rest = text.substr(colon + 1);
  while (!rest.empty()) {
    size_t plus = rest.find('+');
    c.faults.push_back({ParseFault(rest.substr(0, plus)), {}});
    if (plus == std::string_view::npos) break;
    rest = rest.substr(plus + 1);
  }
  return c;
}

std::string ClientSpecString(const ClientHandle& client) {
  std::string s = client.id;
  for (size_t i = 0; i < client.faults.size(); ++i) {
    s += i == 0 ? ":" : "+";
    s += FaultShortName(client.faults[i].id);
  }
  return s;
}

ExecContext CallContext(const Transaction& tx, const BlockContext& block) {
  ExecContext ctx;
  ctx.caller = tx.from;
  ctx.callee = tx.to.value_or(Address());
  ctx.call_value = tx.value;
  ctx.call_data = tx.data;
  ctx.block = block;
  uint64_t gas = std::min(tx.gas_limit, block.gas_limit);
  ctx.gas_limit = gas > gas::kTransaction ? gas - gas::kTransaction : 0;
  return ctx;
}

TxOutcome ProcessTransaction(const StateView& pre, const Transaction& tx,
                             const BlockContext& block) {
  if (tx.nonce != pre.Nonce(tx.from)) {
    throw Error(Errc::kNonceMismatch, "expected nonce " + std::to_string(pre.Nonce(tx.from)) +
                                          ", got " + std::to_string(tx.nonce));
  }
  if (tx.max_fee_per_gas < block.base_fee) {
    throw Error(Errc::kFeeBelowBase, "maxFeePerGas below base fee");
  }
  const Word balance = pre.Balance(tx.from);
  const Word gas = Word(tx.gas_limit);
  if (Word::MulOverflows(gas, tx.max_fee_per_gas)) {
    throw Error(Errc::kInsufficientFunds, "fee overflows");
  }
  Word upfront = gas * tx.max_fee_per_gas;
  if (upfront + tx.value < upfront || balance < upfront + tx.value) {
    throw Error(Errc::kInsufficientFunds, "balance below value + gas * maxFeePerGas");
  }
  if (tx.gas_limit < gas::kTransaction) {
    throw Error(Errc::kIntrinsicGasTooLow, "gas below " + std::to_string(gas::kTransaction));
  }

  TxOutcome out;
  OverlayView post(pre);
  uint64_t gas_used = gas::kTransaction;

  if (!tx.to.has_value()) {
    Address created = ContractAddress(tx.from, tx.nonce);
    Account& acct = post.Mutable(created);
    acct.code.bytes = tx.data;
    acct.balance += tx.value;
    post.Mutable(tx.from).balance -= tx.value;
    out.receipt.contract_address = created;
    out.changed[created];
  } else {
    out.exec = Execute(pre.Code(*tx.to), CallContext(tx, block), pre);
    gas_used += out.exec.gas_used;
    out.receipt.halt = out.exec.halt;
    out.receipt.status = IsSuccess(out.exec.halt) ? TxStatus::kSuccess : TxStatus::kFailed;
    for (const auto& [addr, delta] : out.exec.state_delta) {
      Account& acct = post.Mutable(addr);
      acct.balance += delta.balance_delta;
      for (const auto& [k, v] : delta.storage_writes) {
        if (v.IsZero()) {
          acct.storage.erase(k);
        } else {
          acct.storage[k] = v;
        }
      }
      out.changed[addr];
    }
  }

  Account& sender = post.Mutable(tx.from);
  sender.nonce += 1;
  Word fee = Word(gas_used) * block.base_fee;
  sender.balance -= std::min(fee, sender.balance);
  out.changed[tx.from];
  out.receipt.gas_used = gas_used;

  for (auto& [addr, acct] : out.changed) acct = *post.Find(addr);
  return out;
}

const Account* HistoricalView::Find(const Address& address) const {
  auto it = network_->history_.find(address);
  if (it == network_->history_.end()) return nullptr;
  const auto& versions = it->second;
  auto v = std::upper_bound(versions.begin(), versions.end(), block_,
                            [](uint64_t b, const auto& entry) { return b < entry.first; });
  if (v == versions.begin()) return nullptr;
  return &std::prev(v)->second;
}

Network::Network(NetworkConfig config) : config_(std::move(config)) {
  if (config_.clients.empty()) throw Error(Errc::kZeroClients, "network needs a client");
  std::set<std::string> ids;
  for (const auto& c : config_.clients) {
    if (!ids.insert(c.id).second) throw Error(Errc::kDuplicateClientId, c.id);
  }
  if (!config_.clients.front().faults.empty()) {
    throw Error(Errc::kReferenceHasFaults, config_.clients.front().id);
  }
  if (config_.base_fee.IsZero()) throw Error(Errc::kConfigInvalid, "base fee must be positive");

  for (const auto& [addr, balance] : config_.accounts) {
    Account a;
    a.balance = balance;
    world_.Put(addr, a);
    history_[addr].push_back({0, a});
  }
  Block genesis;
  genesis.context.number = 0;
  genesis.context.timestamp = config_.genesis_timestamp;
  genesis.context.base_fee = config_.base_fee;
  genesis.context.gas_limit = config_.gas_limit;
  genesis.hash = HashBlock(genesis.context, {}, 0, world_.StateHash());
  blocks_.push_back(std::move(genesis));
}

BlockContext FollowingContext(const BlockContext& parent, uint64_t parent_gas_used,
                              const Hash32& parent_hash, const NetworkConfig& config) {
  BlockContext ctx;
  ctx.number = parent.number + 1;
  ctx.timestamp = parent.timestamp + config.block_interval;
  ctx.gas_limit = parent.gas_limit;
  ctx.parent_hash = parent_hash;
  ctx.base_fee = parent.base_fee;
  if (config.adjust_base_fee && parent.number > 0) {
    uint64_t target = parent.gas_limit / 2;
    Word base = parent.base_fee;
    if (parent_gas_used > target) {
      Word step = base * Word(parent_gas_used - target) / Word(target) / Word(8);
      ctx.base_fee = base + (step.IsZero() ? Word(1) : step);
    } else if (parent_gas_used < target) {
      Word step = base * Word(target - parent_gas_used) / Word(target) / Word(8);
      ctx.base_fee = base - step;
      if (ctx.base_fee.IsZero()) ctx.base_fee = Word(1);
    }
  }
  return ctx;
}

BlockContext Network::NextBlockContext() const {
  return FollowingContext(head().context, head().gas_used, head().hash, config_);
}

Receipt Network::Submit(const Transaction& tx) {
  BlockContext ctx = NextBlockContext();
  TxOutcome out = ProcessTransaction(world_, tx, ctx);
  Commit(ctx, tx, out);
  return out.receipt;
}

void Network::Commit(const BlockContext& ctx, const Transaction& tx, const TxOutcome& out) {
  for (const auto& [addr, acct] : out.changed) {
    world_.Put(addr, acct);
    history_[addr].push_back({ctx.number, acct});
  }
  if (out.receipt.contract_address) contracts_.push_back(*out.receipt.contract_address);

  Block b;
  b.context = ctx;
  b.transactions.push_back(tx);
  b.receipts.push_back(out.receipt);
  b.gas_used = out.receipt.gas_used;
  b.hash = HashBlock(ctx, b.transactions, b.gas_used, world_.StateHash());
  tx_index_[tx.Hash()] = {ctx.number, 0};
  blocks_.push_back(std::move(b));
}

Address Network::Deploy(const OpcodeSeq& code, const Address& deployer) {
  Transaction tx;
  tx.from = deployer;
  tx.data = code.bytes;
  tx.gas_limit = gas::kTransaction;
  tx.max_fee_per_gas = NextBlockContext().base_fee;
  tx.nonce = world_.Nonce(deployer);
  return *Submit(tx).contract_address;
}

std::optional<TxLocation> Network::FindTransaction(const Hash32& hash) const {
  auto it = tx_index_.find(hash);
  if (it == tx_index_.end()) return std::nullopt;
  return it->second;
}

const Transaction* Network::TransactionAt(const TxLocation& loc) const {
  if (loc.block >= blocks_.size()) return nullptr;
  const auto& txs = blocks_[loc.block].transactions;
  return loc.index < txs.size() ? &txs[loc.index] : nullptr;
}

std::vector<Address> Network::funded_accounts() const {
  std::vector<Address> out;
  for (const auto& [addr, balance] : config_.accounts) out.push_back(addr);
  return out;
}

}  // namespace ctxfuzz
