#include "ctxfuzz/reform.h"

#include <algorithm>

#include "ctxfuzz/error.h"
#include "ctxfuzz/opcodes.h"

namespace ctxfuzz {

TraceSequence ExtractTrace(const ExecResult& result) {
  if (result.trace.steps.empty()) throw Error(Errc::kEmptyTrace, "no steps executed");
  TraceSequence out;
  for (const TraceStep& s : result.trace.steps) {
    if (s.depth == 0) out.steps.push_back(s);
  }
  return out;
}

ReformOutput ReformWithOrigins(const TraceSequence& trace) {
  std::vector<Instruction> ins;
  std::vector<size_t> origin;
  auto emit = [&](Instruction i, size_t from) {
    // A POP right after a PUSH cancels it; checking on every append reaches
    // the same fixpoint as repeated passes.
    if (i.opcode == op::POP && !ins.empty() && op::IsPush(ins.back().opcode)) {
      ins.pop_back();
      origin.pop_back();
      return;
    }
    ins.push_back(std::move(i));
    origin.push_back(from);
  };
  for (size_t k = 0; k < trace.steps.size(); ++k) {
    const TraceStep& s = trace.steps[k];
    if (s.opcode == op::JUMP) {
      emit({0, op::POP, {}}, k);
    } else if (s.opcode == op::JUMPI) {
      emit({0, op::POP, {}}, k);
      emit({0, op::POP, {}}, k);
    } else {
      emit({0, s.opcode, s.push_data}, k);
    }
  }
  ReformOutput out;
  out.seq.ops = OpcodeSeq::Encode(ins);
  out.origin = std::move(origin);
  return out;
}

LinearSequence Reform(const TraceSequence& trace) { return ReformWithOrigins(trace).seq; }

BasicBlock BasicBlock::FromOps(OpcodeSeq ops) {
  BasicBlock b;
  int depth = 0;
  int lowest = 0;
  for (const Instruction& i : ops.Decode()) {
    const op::Info& info = op::GetInfo(i.opcode);
    depth -= info.inputs;
    lowest = std::min(lowest, depth);
    depth += info.outputs;
  }
  b.ops = std::move(ops);
  b.net_stack_effect = depth;
  b.min_stack_depth = static_cast<unsigned>(-lowest);
  return b;
}

std::vector<BasicBlock> SegmentBlocks(const LinearSequence& seq) {
  std::vector<BasicBlock> out;
  std::vector<Instruction> current;
  auto flush = [&] {
    if (!current.empty()) out.push_back(BasicBlock::FromOps(OpcodeSeq::Encode(current)));
    current.clear();
  };
  for (Instruction& i : seq.ops.Decode()) {
    if (i.opcode == op::JUMPDEST) {
      flush();
    } else {
      current.push_back(std::move(i));
    }
  }
  flush();
  return out;
}

LinearSequence JoinBlocks(const std::vector<BasicBlock>& blocks) {
  LinearSequence seq;
  for (size_t i = 0; i < blocks.size(); ++i) {
    if (i > 0) seq.ops.bytes.push_back(op::JUMPDEST);
    seq.ops.bytes.insert(seq.ops.bytes.end(), blocks[i].ops.bytes.begin(), blocks[i].ops.bytes.end());
  }
  return seq;
}

namespace {

std::map<Address, std::map<Word, Word>> StorageWrites(const StateDelta& delta) {
  std::map<Address, std::map<Word, Word>> out;
  for (const auto& [addr, d] : delta) {
    if (!d.storage_writes.empty()) out[addr] = d.storage_writes;
  }
  return out;
}

EquivalenceVerdict Skip(std::string reason) {
  EquivalenceVerdict v;
  v.skipped = true;
  v.skip_reason = std::move(reason);
  return v;
}

}  // namespace

EquivalenceVerdict CheckEquivalence(const Transaction& original, const LinearSequence& reformed,
                                    const Network& network) {
  auto loc = network.FindTransaction(original.Hash());
  if (!loc) throw Error(Errc::kContextUnavailable, "transaction is not on the chain");
  if (!original.to) return Skip("deployment");

  const BlockContext& block = network.blocks()[loc->block].context;
  HistoricalView pre = network.StateAt(loc->block - 1);
  ExecContext ctx = CallContext(original, block);

  ExecResult before = Execute(pre.Code(*original.to), ctx, pre);
  for (const TraceStep& s : before.trace.steps) {
    if (s.opcode == op::PC || s.opcode == op::GAS || s.opcode == op::MSIZE) {
      return Skip("trace uses " + op::Mnemonic(s.opcode));
    }
    if (s.opcode == op::CALL && s.stack_top.size() > 1 &&
        Address::FromWord(s.stack_top[1]) == *original.to) {
      return Skip("call into the callee");
    }
  }
  if (before.halt == HaltKind::kInvalidJump || before.halt == HaltKind::kOutOfGas) {
    return Skip("original halted with " + std::string(HaltName(before.halt)));
  }

  OverlayView scratch(pre);
  scratch.Mutable(*original.to).code = reformed.ops;
  ExecResult after = Execute(reformed.ops, ctx, scratch);

  EquivalenceVerdict v;
  if (before.halt != after.halt) {
    v.mismatch = {EquivalenceVerdict::Field::kHaltKind,
                  std::string(HaltName(before.halt)) + " vs " + std::string(HaltName(after.halt))};
  } else if (before.return_data != after.return_data) {
    v.mismatch = {EquivalenceVerdict::Field::kReturnData,
                  ToHex(before.return_data) + " vs " + ToHex(after.return_data)};
  } else if (StorageWrites(before.state_delta) != StorageWrites(after.state_delta)) {
    v.mismatch = {EquivalenceVerdict::Field::kStorageDelta, "storage writes differ"};
  }
  v.equivalent = !v.mismatch.has_value();
  return v;
}

}  // namespace ctxfuzz
