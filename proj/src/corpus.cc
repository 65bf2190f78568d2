#include "ctxfuzz/corpus.h"

#include <algorithm>
#include <climits>
#include <filesystem>
#include <fstream>

#include "ctxfuzz/error.h"
#include "ctxfuzz/opcodes.h"
#include "ctxfuzz/rpc/hexfmt.h"

namespace ctxfuzz {

using rpc::Json;

SeedItem SeedStream::Pop() {
  if (items_.empty()) throw Error(Errc::kStreamExhausted, "seed stream is empty");
  SeedItem item = std::move(items_.front());
  items_.pop_front();
  return item;
}

// ---- JSON forms ----

namespace {

constexpr std::string_view kTxKeys[] = {"from", "to",           "value", "data",
                                        "gasLimit", "maxFeePerGas", "nonce"};

[[noreturn]] void BadField(std::string_view key, std::string_view why) {
  throw Error(Errc::kSeedFormat, "field \"" + std::string(key) + "\": " + std::string(why));
}

const Json& Field(const Json& j, std::string_view key) {
  auto it = j.find(key);
  if (it == j.end()) BadField(key, "missing");
  return *it;
}

uint64_t DecimalField(const Json& j, std::string_view key) {
  const Json& v = Field(j, key);
  if (!v.is_number_unsigned()) BadField(key, "expected a non-negative integer");
  return v.get<uint64_t>();
}

Word QuantityField(const Json& j, std::string_view key) {
  auto w = rpc::ParseQuantity(Field(j, key));
  if (!w) BadField(key, "expected a hex quantity");
  return *w;
}

Bytes DataField(const Json& j, std::string_view key) {
  auto b = rpc::ParseData(Field(j, key));
  if (!b) BadField(key, "expected hex data");
  return *b;
}

Address AddressField(const Json& v, std::string_view key) {
  auto a = rpc::ParseAddress(v);
  if (!a) BadField(key, "expected a 20-byte address");
  return *a;
}

std::vector<std::string> ReadLines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIo, "cannot open " + path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(std::move(line));
  return lines;
}

template <typename F>
auto ParseLine(const std::string& path, size_t lineno, const std::string& line, F parse) {
  try {
    return parse(Json::parse(line));
  } catch (const Json::exception& e) {
    throw Error(Errc::kSeedFormat, path + ":" + std::to_string(lineno) + ": " + e.what());
  } catch (const Error& e) {
    if (e.code() != Errc::kSeedFormat && e.code() != Errc::kBadHex) throw;
    throw Error(Errc::kSeedFormat, path + ":" + std::to_string(lineno) + ": " + e.what());
  }
}

bool IsBlank(std::string_view line) {
  return line.find_first_not_of(" \t\r") == std::string_view::npos;
}

void WriteLines(const std::string& path, const std::vector<Json>& docs) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::kIo, "cannot write " + path);
  for (const Json& d : docs) out << d.dump() << '\n';
  if (!out) throw Error(Errc::kIo, "write failed for " + path);
}

}  // namespace

Json TransactionToJson(const Transaction& tx) {
  Json j = Json::object();
  j["from"] = tx.from.Hex();
  j["to"] = tx.to ? Json(tx.to->Hex()) : Json(nullptr);
  j["value"] = tx.value.Hex();
  j["data"] = ToHex(tx.data);
  j["gasLimit"] = tx.gas_limit;
  j["maxFeePerGas"] = tx.max_fee_per_gas.Hex();
  j["nonce"] = tx.nonce;
  return j;
}

Transaction TransactionFromJson(const Json& j, std::span<const std::string_view> extra_keys) {
  if (!j.is_object()) throw Error(Errc::kSeedFormat, "expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool known = std::find(std::begin(kTxKeys), std::end(kTxKeys), key) != std::end(kTxKeys) ||
                 std::find(extra_keys.begin(), extra_keys.end(), key) != extra_keys.end();
    if (!known) BadField(key, "unknown key");
  }
  Transaction tx;
  tx.from = AddressField(Field(j, "from"), "from");
  const Json& to = Field(j, "to");
  if (!to.is_null()) tx.to = AddressField(to, "to");
  tx.value = QuantityField(j, "value");
  tx.data = DataField(j, "data");
  tx.gas_limit = DecimalField(j, "gasLimit");
  tx.max_fee_per_gas = QuantityField(j, "maxFeePerGas");
  tx.nonce = DecimalField(j, "nonce");
  return tx;
}

Json SeedToJson(const SeedItem& seed) {
  Json j = TransactionToJson(seed.tx);
  j["calleeCode"] = seed.callee_code.Hex();
  return j;
}

SeedItem SeedFromJson(const Json& j) {
  static constexpr std::string_view kExtra[] = {"calleeCode"};
  SeedItem seed;
  seed.tx = TransactionFromJson(j, kExtra);
  seed.callee_code.bytes = DataField(j, "calleeCode");
  return seed;
}

SeedStream LoadSeedFile(const std::string& path) {
  std::vector<SeedItem> items;
  std::vector<std::string> lines = ReadLines(path);
  for (size_t i = 0; i < lines.size(); ++i) {
    if (IsBlank(lines[i])) continue;
    items.push_back(ParseLine(path, i + 1, lines[i], SeedFromJson));
  }
  return SeedStream(std::move(items));
}

void SaveSeedFile(const std::string& path, const SeedStream& stream) {
  std::vector<Json> docs;
  for (const SeedItem& s : stream.items()) docs.push_back(SeedToJson(s));
  WriteLines(path, docs);
}

// ---- synthesis ----

namespace {

constexpr uint8_t kBinaryOps[] = {op::ADD, op::MUL, op::SUB, op::DIV, op::MOD, op::LT,
                                  op::GT,  op::EQ,  op::AND, op::OR,  op::XOR};
constexpr uint8_t kEnvOps[] = {op::ADDRESS,   op::CALLER, op::CALLVALUE, op::CALLDATASIZE,
                               op::TIMESTAMP, op::NUMBER, op::GASLIMIT};
constexpr uint8_t kPositionOps[] = {op::PC, op::GAS, op::MSIZE};

enum Stmt {
  kPushConst,
  kBinary,
  kUnary,
  kEnv,
  kBasefee,
  kSstore,
  kSload,
  kTstore,
  kTload,
  kMstore,
  kMload,
  kKeccak,
  kCalldataload,
  kBalance,
  kDup,
  kSwap,
  kPop,
  kCall,
  kPosition,
  kStmtCount,
};

// Statement weights before stack-depth filtering.
constexpr double kStmtWeights[kStmtCount] = {
    3.0,  // kPushConst
    2.0,  // kBinary
    0.7,  // kUnary
    1.5,  // kEnv
    1.2,  // kBasefee
    1.5,  // kSstore
    1.0,  // kSload
    0.6,  // kTstore
    0.6,  // kTload
    1.0,  // kMstore
    0.8,  // kMload
    0.6,  // kKeccak
    0.6,  // kCalldataload
    0.4,  // kBalance
    0.8,  // kDup
    0.6,  // kSwap
    0.8,  // kPop
    0.7,  // kCall
    0.6,  // kPosition
};

// Minimum stack depth each statement needs.
constexpr int kStmtNeeds[kStmtCount] = {0, 2, 1, 0, 0, 1, 0, 1, 0, 1, 0, 0, 0, 0, 1, 2, 1, 0, 0};

// Depth above which only statements that shrink the stack are drawn.
constexpr int kSoftDepthCap = 18;

class ContractWriter {
 public:
  ContractWriter(Rng& rng, std::span<const Address> callees, const SynthesisOptions& opts)
      : rng_(rng), callees_(callees), opts_(opts) {}

  OpcodeSeq Write() {
    position_sensitive_ = rng_.Chance(opts_.position_sensitive);
    const uint32_t blocks = static_cast<uint32_t>(rng_.Range(1, std::max(1u, opts_.max_blocks)));
    std::vector<size_t> offsets(blocks, 0);
    bool reachable = true;
    for (uint32_t b = 0; b < blocks; ++b) {
      if (b > 0) {
        int entry = reachable ? depth_ : INT_MAX;
        for (const Jump& j : jumps_) {
          if (j.target == b) entry = std::min(entry, j.depth);
        }
        depth_ = entry == INT_MAX ? 0 : entry;
        offsets[b] = a_.size();
        a_.Op(op::JUMPDEST);
        reachable = true;
      }
      const uint64_t statements = rng_.Range(1, std::max(1u, opts_.max_statements));
      for (uint64_t s = 0; s < statements; ++s) Statement();
      if (b + 1 == blocks) break;
      double r = rng_.Unit();
      if (r < 0.5) continue;
      uint32_t target = static_cast<uint32_t>(rng_.Range(b + 1, blocks - 1));
      if (r < 0.75) {
        Condition();
        EmitJump(target, op::JUMPI);
      } else {
        EmitJump(target, op::JUMP);
        reachable = false;
        // Dead code between the jump and its target.
        if (rng_.Chance(0.3)) Statement();
      }
    }
    Ending();

    OpcodeSeq code = a_.Build();
    for (const Jump& j : jumps_) {
      code.bytes[j.patch] = static_cast<uint8_t>(offsets[j.target] >> 8);
      code.bytes[j.patch + 1] = static_cast<uint8_t>(offsets[j.target]);
    }
    return code;
  }

 private:
  struct Jump {
    size_t patch;  // offset of the PUSH2 immediate
    uint32_t target;
    int depth;
  };

  void EmitJump(uint32_t target, uint8_t opcode) {
    jumps_.push_back({a_.size() + 1, target, depth_});
    a_.PushN(2, 0).Op(opcode);
  }

  void PushSmall(uint64_t bound) { a_.Push(rng_.Below(bound)); }

  void Condition() {
    switch (rng_.Below(depth_ >= 1 ? 4 : 3)) {
      case 0: a_.Push(rng_.Below(2)); break;
      case 1: a_.Op(op::CALLVALUE); break;
      case 2: a_.Op(op::CALLDATASIZE); break;
      default: a_.Op(op::DUP1); break;
    }
  }

  void PushConst() {
    double r = rng_.Unit();
    if (r < 0.1) {
      a_.Op(op::PUSH0);
    } else if (r < 0.5) {
      PushSmall(256);
    } else {
      a_.PushBytes(rng_.RandomBytes(rng_.Range(1, 32)));
    }
  }

  void Statement() {
    double weights[kStmtCount];
    for (int k = 0; k < kStmtCount; ++k) {
      bool usable = depth_ >= kStmtNeeds[k];
      if (k == kPosition && !position_sensitive_) usable = false;
      if (depth_ > kSoftDepthCap && k != kBinary && k != kPop && k != kSstore && k != kMstore) {
        usable = false;
      }
      weights[k] = usable ? kStmtWeights[k] : 0.0;
    }
    switch (static_cast<Stmt>(rng_.Weighted(weights))) {
      case kPushConst: PushConst(); ++depth_; break;
      case kBinary: a_.Op(rng_.Pick<uint8_t>(kBinaryOps)); --depth_; break;
      case kUnary: a_.Op(rng_.Chance(0.5) ? op::ISZERO : op::NOT); break;
      case kEnv: a_.Op(rng_.Pick<uint8_t>(kEnvOps)); ++depth_; break;
      case kBasefee:
        a_.Op(op::BASEFEE);
        ++depth_;
        break;
      case kSstore: PushSmall(8); a_.Op(op::SSTORE); --depth_; break;
      case kSload: PushSmall(8); a_.Op(op::SLOAD); ++depth_; break;
      case kTstore: PushSmall(4); a_.Op(op::TSTORE); --depth_; break;
      case kTload: PushSmall(4); a_.Op(op::TLOAD); ++depth_; break;
      case kMstore: a_.Push(32 * rng_.Below(8)); a_.Op(op::MSTORE); --depth_; break;
      case kMload: a_.Push(32 * rng_.Below(8)); a_.Op(op::MLOAD); ++depth_; break;
      case kKeccak:
        a_.Push(32 * rng_.Below(3));
        a_.Push(32 * rng_.Below(4));
        a_.Op(op::KECCAK256);
        ++depth_;
        break;
      case kCalldataload: PushSmall(64); a_.Op(op::CALLDATALOAD); ++depth_; break;
      case kBalance:
        if (rng_.Chance(0.5)) {
          a_.Op(op::CALLER);
        } else {
          a_.Op(op::ADDRESS);
        }
        a_.Op(op::BALANCE);
        ++depth_;
        break;
      case kDup:
        a_.Op(static_cast<uint8_t>(op::DUP1 + rng_.Below(std::min(depth_, 16))));
        ++depth_;
        break;
      case kSwap:
        a_.Op(static_cast<uint8_t>(op::SWAP1 + rng_.Below(std::min(depth_ - 1, 16))));
        break;
      case kPop: a_.Op(op::POP); --depth_; break;
      case kCall: Call(); ++depth_; break;
      case kPosition: a_.Op(rng_.Pick<uint8_t>(kPositionOps)); ++depth_; break;
      case kStmtCount: break;
    }
  }

  void Call() {
    Address target;
    if (!callees_.empty() && rng_.Chance(0.8)) {
      target = rng_.Pick(callees_);
    } else {
      Bytes b = rng_.RandomBytes(20);
      std::copy(b.begin(), b.end(), target.bytes.begin());
    }
    a_.Push(32 * rng_.Below(2));            // retSize
    a_.Push(32 * rng_.Below(3));            // retOffset
    a_.Push(32 * rng_.Below(2));            // argsSize
    a_.Push(0);                             // argsOffset
    a_.Push(rng_.Chance(0.8) ? 0 : rng_.Below(1000));  // value
    a_.PushBytes(Bytes(target.bytes.begin(), target.bytes.end()));
    a_.PushN(3, rng_.Range(1'000, 100'000));  // gas
    a_.Op(op::CALL);
  }

  void Ending() {
    double r = rng_.Unit();
    if (r < 0.45) {
      a_.Op(op::STOP);
    } else if (r < 0.9) {
      a_.Push(32 * rng_.Below(3));
      a_.Push(32 * rng_.Below(2));
      a_.Op(r < 0.75 ? op::RETURN : op::REVERT);
    }
    // Otherwise execution runs off the end of the code.
  }

  Rng& rng_;
  std::span<const Address> callees_;
  const SynthesisOptions& opts_;
  Assembler a_;
  int depth_ = 0;
  bool position_sensitive_ = false;
  std::vector<Jump> jumps_;
};

}  // namespace

OpcodeSeq SynthesizeContract(Rng& rng, std::span<const Address> callees,
                             const SynthesisOptions& opts) {
  return ContractWriter(rng, callees, opts).Write();
}

SeedStream SynthesizeSeedStream(uint64_t seed, size_t count, Network& network,
                                const SynthesisOptions& opts) {
  std::vector<SeedItem> items;
  if (count == 0) return SeedStream();
  const std::vector<Address> funded = network.funded_accounts();
  if (funded.empty()) throw Error(Errc::kInvalidContext, "network has no funded accounts");

  Rng rng(DeriveSeed(seed, "synthesize"));
  for (size_t i = 0; i < count; ++i) {
    std::vector<Address> callees = network.contracts();
    OpcodeSeq code = SynthesizeContract(rng, callees, opts);
    Address contract = network.Deploy(code, funded.front());

    Transaction tx;
    tx.from = funded[i % funded.size()];
    tx.to = contract;
    tx.value = rng.Chance(0.5) ? Word() : Word(rng.Below(1'000'000'000'000'000));
    tx.data = rng.RandomBytes(rng.Below(65));
    tx.gas_limit = opts.tx_gas;
    tx.max_fee_per_gas = network.NextBlockContext().base_fee * Word(rng.Range(1, 3));
    tx.nonce = network.world().Nonce(tx.from);
    network.Submit(tx);
    items.push_back({tx, std::move(code)});
  }
  return SeedStream(std::move(items));
}

// ---- replay ----

ExecResult ChainReplay::Replay(const SeedItem& seed) const {
  if (!seed.tx.to) return {};
  if (auto loc = network_->FindTransaction(seed.tx.Hash())) {
    HistoricalView pre = network_->StateAt(loc->block - 1);
    return Execute(pre.Code(*seed.tx.to), CallContext(seed.tx, network_->blocks()[loc->block].context),
                   pre);
  }
  return WorldReplay(network_->world(), network_->NextBlockContext()).Replay(seed);
}

ExecResult WorldReplay::Replay(const SeedItem& seed) const {
  if (!seed.tx.to) return {};
  OverlayView view(*world_);
  if (!seed.callee_code.empty()) view.Mutable(*seed.tx.to).code = seed.callee_code;
  ExecContext ctx = CallContext(seed.tx, block_);
  return Execute(view.Code(*seed.tx.to), ctx, view);
}

// ---- selection ----

void CorpusConfig::Validate() const {
  if (max_selected < 1) throw Error(Errc::kConfigInvalid, "maxSelected must be at least 1");
}

CorpusState SelectInitialCorpus(SeedStream& stream, const CorpusConfig& config,
                                const ReplayContext& replay, SelectionStats* stats) {
  config.Validate();
  SelectionStats local;
  SelectionStats& st = stats ? *stats : local;
  CorpusState state;
  while (state.accumulated.size() < config.coverage_threshold &&
         state.selected.size() < config.max_selected && !stream.empty()) {
    SeedItem seed = stream.Pop();
    ++st.popped;
    std::set<uint8_t> static_ops = ScanOpcodes(seed.callee_code);
    if (std::includes(state.seen_opcodes.begin(), state.seen_opcodes.end(), static_ops.begin(),
                      static_ops.end())) {
      ++st.skipped_by_opcode_gate;
      continue;
    }
    ExecResult result = replay.Replay(seed);
    ++st.executed;
    if (state.accumulated.CountNew(result.coverage) == 0) continue;

    CorpusEntry entry;
    entry.tx = seed.tx;
    entry.callee_code = seed.callee_code;
    entry.coverage = result.coverage;
    for (const TraceStep& s : result.trace.steps) entry.executed_opcodes.insert(s.opcode);
    entry.reformed = Reform(ExtractTrace(result));
    entry.reformed->provenance = seed.tx.Hash();

    state.accumulated.Merge(entry.coverage);
    state.seen_opcodes.insert(entry.executed_opcodes.begin(), entry.executed_opcodes.end());
    state.selected.push_back(std::move(entry));
    ++st.recorded;
  }
  return state;
}

// ---- persistence ----

Json CorpusEntryToJson(const CorpusEntry& entry) {
  Json j = Json::object();
  j["hash"] = entry.tx.Hash().Hex();
  j["tx"] = TransactionToJson(entry.tx);
  j["calleeCode"] = entry.callee_code.Hex();
  Json cov = Json::array();
  for (CoverageUnit u : entry.coverage.units()) cov.push_back(u.ToString());
  j["coverage"] = std::move(cov);
  Json ops = Json::array();
  for (uint8_t o : entry.executed_opcodes) ops.push_back(o);
  j["executedOpcodes"] = std::move(ops);
  if (entry.reformed) {
    j["reformed"] = {{"ops", entry.reformed->ops.Hex()},
                     {"provenance", entry.reformed->provenance
                                        ? Json(entry.reformed->provenance->Hex())
                                        : Json(nullptr)}};
  } else {
    j["reformed"] = nullptr;
  }
  return j;
}

CorpusEntry CorpusEntryFromJson(const Json& j) {
  if (!j.is_object()) throw Error(Errc::kSeedFormat, "expected a JSON object");
  CorpusEntry e;
  e.tx = TransactionFromJson(Field(j, "tx"));
  auto hash = rpc::ParseHash(Field(j, "hash"));
  if (!hash || *hash != e.tx.Hash()) BadField("hash", "does not match the transaction");
  e.callee_code.bytes = DataField(j, "calleeCode");
  const Json& cov = Field(j, "coverage");
  if (!cov.is_array()) BadField("coverage", "expected an array");
  for (const Json& u : cov) {
    if (!u.is_string()) BadField("coverage", "expected unit strings");
    e.coverage.Insert(CoverageUnit::Parse(u.get<std::string>()));
  }
  const Json& ops = Field(j, "executedOpcodes");
  if (!ops.is_array()) BadField("executedOpcodes", "expected an array");
  for (const Json& o : ops) {
    if (!o.is_number_unsigned() || o.get<uint64_t>() > 255) BadField("executedOpcodes", "expected bytes");
    e.executed_opcodes.insert(static_cast<uint8_t>(o.get<uint64_t>()));
  }
  const Json& ref = Field(j, "reformed");
  if (!ref.is_null()) {
    LinearSequence seq;
    seq.ops.bytes = DataField(ref, "ops");
    const Json& prov = Field(ref, "provenance");
    if (!prov.is_null()) {
      auto h = rpc::ParseHash(prov);
      if (!h) BadField("provenance", "expected a 32-byte hash");
      seq.provenance = *h;
    }
    e.reformed = std::move(seq);
  }
  return e;
}

void SaveCorpus(const std::string& dir, const CorpusState& state) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(Errc::kIo, "cannot create " + dir + ": " + ec.message());
  std::vector<Json> docs;
  for (const CorpusEntry& e : state.selected) docs.push_back(CorpusEntryToJson(e));
  WriteLines((std::filesystem::path(dir) / "entries.jsonl").string(), docs);
}

CorpusState LoadCorpus(const std::string& dir) {
  const std::string path = (std::filesystem::path(dir) / "entries.jsonl").string();
  CorpusState state;
  std::vector<std::string> lines = ReadLines(path);
  for (size_t i = 0; i < lines.size(); ++i) {
    if (IsBlank(lines[i])) continue;
    CorpusEntry e = ParseLine(path, i + 1, lines[i], CorpusEntryFromJson);
    state.accumulated.Merge(e.coverage);
    state.seen_opcodes.insert(e.executed_opcodes.begin(), e.executed_opcodes.end());
    state.selected.push_back(std::move(e));
  }
  return state;
}

}  // namespace ctxfuzz
