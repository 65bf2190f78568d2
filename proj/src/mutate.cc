#include "ctxfuzz/mutate.h"

#include <algorithm>

#include "ctxfuzz/error.h"
#include "ctxfuzz/opcodes.h"

namespace ctxfuzz {
namespace {

// Fallback offsets when no memory location is known yet.
constexpr uint64_t kRandomOffsetBound = 1024;

// Abstract stack value: a known constant or unknown.
using Abstract = std::optional<Word>;

Abstract PopAbstract(std::vector<Abstract>& stack) {
  if (stack.empty()) return std::nullopt;
  Abstract v = stack.back();
  stack.pop_back();
  return v;
}

OpcodeSeq PushOf(const Word& value) {
  auto be = value.ToBigEndian();
  auto first = std::find_if(be.begin(), be.end() - 1, [](uint8_t b) { return b != 0; });
  return Assembler().PushBytes(Bytes(first, be.end())).Build();
}

OpcodeSeq PushOf(uint64_t value) { return Assembler().Push(value).Build(); }

template <typename T>
const T& PickFrom(const std::set<T>& items, Rng& rng) {
  auto it = items.begin();
  std::advance(it, rng.Below(items.size()));
  return *it;
}

Word RandomKey(Rng& rng) { return Word::FromBigEndian(rng.RandomBytes(rng.Range(1, 32))); }

uint64_t ChooseOffset(const StateLocations& locs, Rng& rng) {
  if (locs.mem_offsets.empty()) return rng.Below(kRandomOffsetBound);
  return PickFrom(locs.mem_offsets, rng);
}

// Log-uniform in [0, cap]: a uniform bit length, then uniform below it.
Word LogUniform(const Word& cap, Rng& rng) {
  if (cap.IsZero()) return Word();
  unsigned bits = static_cast<unsigned>(rng.Below(cap.BitLength() + 1));
  Word bound = Word::FromRep(Word::Rep(1) << bits);
  Word limit = cap + Word(1);
  return rng.WordBelow(bound < limit ? bound : limit);
}

}  // namespace

StateLocations AnalyzeUsedLocations(const LinearSequence& seq) {
  StateLocations out;
  std::vector<Abstract> stack;
  for (const Instruction& ins : seq.ops.Decode()) {
    const uint8_t o = ins.opcode;
    if (op::IsPush(o)) {
      stack.push_back(Word::FromBigEndian(ins.immediate));
    } else if (op::IsDup(o)) {
      size_t n = o - op::DUP1 + 1;
      stack.push_back(stack.size() >= n ? stack[stack.size() - n] : std::nullopt);
    } else if (op::IsSwap(o)) {
      size_t n = o - op::SWAP1 + 1;
      if (stack.size() < n + 1) stack.insert(stack.begin(), n + 1 - stack.size(), std::nullopt);
      std::swap(stack.back(), stack[stack.size() - 1 - n]);
    } else if (o == op::SSTORE || o == op::TSTORE) {
      Abstract key = PopAbstract(stack);
      PopAbstract(stack);
      if (key) (o == op::SSTORE ? out.storage_keys : out.transient_keys).insert(*key);
    } else if (o == op::MSTORE) {
      Abstract offset = PopAbstract(stack);
      PopAbstract(stack);
      if (offset && offset->FitsU64() && offset->Low64() < kMemoryLimit) {
        out.mem_offsets.insert(offset->Low64());
        out.mem_high_water = std::max(out.mem_high_water, offset->Low64() + 32);
      }
    } else {
      const op::Info& info = op::GetInfo(o);
      for (int i = 0; i < info.inputs; ++i) PopAbstract(stack);
      for (int i = 0; i < info.outputs; ++i) stack.push_back(std::nullopt);
    }
  }
  return out;
}

std::vector<uint8_t> DefaultOpcodeCorpus() {
  std::vector<uint8_t> out;
  for (uint8_t o : op::SupportedOpcodes()) {
    if (o != op::JUMP && o != op::JUMPI) out.push_back(o);
  }
  return out;
}

void MutationConfig::Validate() const {
  const double w[] = {weights.block_insert, weights.block_delete, weights.op_insert,
                      weights.op_delete};
  if (std::any_of(std::begin(w), std::end(w), [](double x) { return !(x >= 0); })) {
    throw Error(Errc::kConfigInvalid, "mutation weights must be non-negative");
  }
  if (std::all_of(std::begin(w), std::end(w), [](double x) { return x == 0; })) {
    throw Error(Errc::kConfigInvalid, "mutation weights are all zero");
  }
  for (uint8_t o : opcode_corpus) {
    if (o == op::JUMP || o == op::JUMPI) {
      throw Error(Errc::kConfigInvalid, "opcode corpus must not contain JUMP or JUMPI");
    }
  }
}

std::vector<BasicBlock> BuildBlockCorpus(const CorpusState& corpus) {
  std::vector<BasicBlock> out;
  std::set<Bytes> seen;
  for (const CorpusEntry& e : corpus.selected) {
    if (!e.reformed) continue;
    for (BasicBlock& b : SegmentBlocks(*e.reformed)) {
      if (seen.insert(b.ops.bytes).second) out.push_back(std::move(b));
    }
  }
  return out;
}

LinearSequence MutateBlockLevel(const LinearSequence& seq, const MutationConfig& cfg, Rng& rng,
                                Edit edit) {
  std::vector<BasicBlock> blocks = SegmentBlocks(seq);
  if (edit == Edit::kDelete && blocks.empty()) edit = Edit::kInsert;
  if (edit == Edit::kInsert) {
    if (cfg.block_corpus.empty()) return seq;
    size_t at = rng.Below(blocks.size() + 1);
    blocks.insert(blocks.begin() + at, rng.Pick<BasicBlock>(cfg.block_corpus));
  } else {
    blocks.erase(blocks.begin() + rng.Below(blocks.size()));
  }
  LinearSequence out = JoinBlocks(blocks);
  out.provenance = seq.provenance;
  return out;
}

LinearSequence MutateBlockLevel(const LinearSequence& seq, const MutationConfig& cfg, Rng& rng) {
  const double w[] = {cfg.weights.block_insert, cfg.weights.block_delete};
  Edit edit = w[0] + w[1] > 0 && rng.Weighted(w) == 1 ? Edit::kDelete : Edit::kInsert;
  return MutateBlockLevel(seq, cfg, rng, edit);
}

OpcodeSeq InsertionSnippet(uint8_t opcode, const StateLocations& locs, const MutationConfig& cfg,
                           Rng& rng) {
  Assembler a;
  int k = op::PushSize(opcode);
  if (op::IsPush(opcode) && k > 0) return a.PushBytes(rng.RandomBytes(k)).Build();
  if (cfg.state_aware) {
    switch (opcode) {
      case op::SLOAD:
        a.Append(PushOf(locs.storage_keys.empty() ? RandomKey(rng) : PickFrom(locs.storage_keys, rng)));
        break;
      case op::TLOAD:
        a.Append(PushOf(locs.transient_keys.empty() ? RandomKey(rng)
                                                    : PickFrom(locs.transient_keys, rng)));
        break;
      case op::MLOAD:
        a.Append(PushOf(ChooseOffset(locs, rng)));
        break;
      case op::KECCAK256:
        a.Push(32).Append(PushOf(ChooseOffset(locs, rng)));
        break;
      default:
        break;
    }
  }
  return a.Op(opcode).Build();
}

LinearSequence MutateOpcodeLevel(const LinearSequence& seq, const StateLocations& locs,
                                 const MutationConfig& cfg, Rng& rng, Edit edit) {
  std::vector<Instruction> ins = seq.ops.Decode();
  if (edit == Edit::kDelete && ins.empty()) edit = Edit::kInsert;
  if (edit == Edit::kInsert) {
    if (cfg.opcode_corpus.empty()) return seq;
    size_t at = rng.Below(ins.size() + 1);
    OpcodeSeq snippet = InsertionSnippet(rng.Pick<uint8_t>(cfg.opcode_corpus), locs, cfg, rng);
    std::vector<Instruction> add = snippet.Decode();
    ins.insert(ins.begin() + at, add.begin(), add.end());
  } else {
    ins.erase(ins.begin() + rng.Below(ins.size()));
  }
  LinearSequence out{OpcodeSeq::Encode(ins), seq.provenance};
  return out;
}

LinearSequence MutateOpcodeLevel(const LinearSequence& seq, const StateLocations& locs,
                                 const MutationConfig& cfg, Rng& rng) {
  const double w[] = {cfg.weights.op_insert, cfg.weights.op_delete};
  Edit edit = w[0] + w[1] > 0 && rng.Weighted(w) == 1 ? Edit::kDelete : Edit::kInsert;
  return MutateOpcodeLevel(seq, locs, cfg, rng, edit);
}

ExecResult SimulateOffChain(const Transaction& tx, const StateView& snapshot,
                            const BlockContext& block) {
  if (!tx.to || snapshot.Find(*tx.to) == nullptr) {
    throw Error(Errc::kMissingCallee, "callee is not in the snapshot");
  }
  return Execute(snapshot.Code(*tx.to), CallContext(tx, block), snapshot);
}

ContextArtifacts FuzzContextLoop(CorpusState& corpus, size_t budget, Network& network,
                                 const MutationConfig& cfg) {
  cfg.Validate();
  ContextArtifacts art;
  art.final_coverage = corpus.accumulated;
  if (budget == 0) return art;

  double weights[] = {cfg.weights.block_insert, cfg.weights.block_delete, cfg.weights.op_insert,
                      cfg.weights.op_delete};
  // The operator mix stays fixed even when an insertion source is empty; such
  // draws leave the parent unchanged.
  bool can_grow = (weights[0] > 0 && !cfg.block_corpus.empty()) ||
                  (weights[2] > 0 && !cfg.opcode_corpus.empty());
  if (corpus.selected.empty() && !can_grow) {
    throw Error(Errc::kEmptyInitialState, "no corpus entries and no insertion source");
  }

  std::vector<Address> funded = network.funded_accounts();
  if (!cfg.deployer && funded.empty()) {
    throw Error(Errc::kInvalidContext, "network has no funded accounts");
  }
  const Address deployer = cfg.deployer.value_or(funded.front());
  std::vector<Address> senders = cfg.senders;
  if (senders.empty()) {
    for (const Address& a : funded) {
      if (a != deployer) senders.push_back(a);
    }
    if (senders.empty()) senders.push_back(deployer);
  }

  Rng rng(cfg.rng_seed);
  for (size_t iter = 0; iter < budget; ++iter) {
    ++art.stats.generated;
    const CorpusEntry* parent =
        corpus.selected.empty() ? nullptr : &corpus.selected[rng.Below(corpus.selected.size())];
    LinearSequence seq;
    if (parent && parent->reformed) seq = *parent->reformed;
    if (parent) seq.provenance = parent->tx.Hash();

    LinearSequence mutant;
    switch (rng.Weighted(weights)) {
      case 0: mutant = MutateBlockLevel(seq, cfg, rng, Edit::kInsert); break;
      case 1: mutant = MutateBlockLevel(seq, cfg, rng, Edit::kDelete); break;
      case 2: mutant = MutateOpcodeLevel(seq, AnalyzeUsedLocations(seq), cfg, rng, Edit::kInsert); break;
      default: mutant = MutateOpcodeLevel(seq, AnalyzeUsedLocations(seq), cfg, rng, Edit::kDelete); break;
    }

    // Deployment, applied to a private overlay of the head state.
    const BlockContext deploy_block = network.NextBlockContext();
    Transaction deploy;
    deploy.from = deployer;
    deploy.data = mutant.ops.bytes;
    deploy.gas_limit = gas::kTransaction;
    deploy.max_fee_per_gas = deploy_block.base_fee;
    deploy.nonce = network.world().Nonce(deployer);
    TxOutcome deployed = ProcessTransaction(network.world(), deploy, deploy_block);
    OverlayView snapshot(network.world());
    for (const auto& [addr, acct] : deployed.changed) snapshot.Put(addr, acct);

    const BlockContext call_block =
        FollowingContext(deploy_block, deployed.receipt.gas_used, Hash32(), network.config());
    Transaction call;
    call.from = senders[rng.Below(senders.size())];
    call.to = deployed.receipt.contract_address;
    const Word balance = snapshot.Balance(call.from);
    call.value = LogUniform(balance / Word(4), rng);
    call.max_fee_per_gas = rng.WordRange(call_block.base_fee, call_block.base_fee * Word(10) + Word(1));
    call.gas_limit = rng.Range(gas::kTransaction, 2 * call_block.gas_limit);
    call.data = parent ? parent->tx.data : Bytes();
    call.nonce = snapshot.Nonce(call.from);
    if (Word(call.gas_limit) * call.max_fee_per_gas + call.value > balance) {
      call.value = Word();
      call.max_fee_per_gas = call_block.base_fee;
    }

    ExecResult sim = SimulateOffChain(call, snapshot, call_block);
    if (sim.halt != HaltKind::kStop && sim.halt != HaltKind::kReturn &&
        sim.halt != HaltKind::kRevert) {
      ++art.stats.invalid_halts;
    }
    if (corpus.accumulated.CountNew(sim.coverage) == 0) continue;
    ++art.stats.interesting;

    try {
      ProcessTransaction(snapshot, call, call_block);
    } catch (const Error&) {
      // The sender cannot afford the call; the mutant stays off-chain.
      continue;
    }
    network.Submit(deploy);
    network.Submit(call);
    ++art.stats.deployed;
    art.deployed_txs.push_back(deploy);
    art.deployed_txs.push_back(call);

    CorpusEntry entry;
    entry.tx = call;
    entry.callee_code = mutant.ops;
    entry.coverage = sim.coverage;
    for (const TraceStep& s : sim.trace.steps) entry.executed_opcodes.insert(s.opcode);
    mutant.provenance = call.Hash();
    entry.reformed = std::move(mutant);
    corpus.accumulated.Merge(entry.coverage);
    corpus.seen_opcodes.insert(entry.executed_opcodes.begin(), entry.executed_opcodes.end());
    corpus.selected.push_back(std::move(entry));
  }
  art.final_coverage = corpus.accumulated;
  return art;
}

}  // namespace ctxfuzz
