#include "ctxfuzz/evm.h"

#include <algorithm>
#include <map>
#include <utility>

#include "ctxfuzz/error.h"
#include "ctxfuzz/keccak.h"
#include "ctxfuzz/opcodes.h"

namespace ctxfuzz {
namespace {

// Writes made by the running transaction; the base view stays untouched.
struct Journal {
  std::map<Address, Word> balances;
  std::map<Address, std::map<Word, Word>> storage;
  std::map<std::pair<Address, Word>, Word> transient;
};

struct FrameOutcome {
  HaltKind halt;
  Bytes return_data;
  uint64_t gas_left;
};

class Interpreter {
 public:
  Interpreter(const StateView& world, const BlockContext& block) : world_(world), block_(block) {}

  FrameOutcome RunFrame(const OpcodeSeq& code, const Address& self, const Address& caller,
                        const Word& value, const Bytes& data, uint64_t gas, uint32_t depth);

  Word Balance(const Address& a) const {
    auto it = journal_.balances.find(a);
    return it != journal_.balances.end() ? it->second : world_.Balance(a);
  }

  void Transfer(const Address& from, const Address& to, const Word& value) {
    if (value.IsZero() || from == to) return;
    Word from_balance = Balance(from);
    Word to_balance = Balance(to);
    journal_.balances[from] = from_balance - value;
    journal_.balances[to] = to_balance + value;
  }

  StateDelta BuildDelta() const {
    StateDelta delta;
    for (const auto& [addr, balance] : journal_.balances) {
      Word d = balance - world_.Balance(addr);
      if (!d.IsZero()) delta[addr].balance_delta = d;
    }
    for (const auto& [addr, writes] : journal_.storage) {
      if (!writes.empty()) delta[addr].storage_writes = writes;
    }
    return delta;
  }

  TraceSequence TakeTrace() { return std::move(trace_); }
  CoverageMap TakeCoverage() { return std::move(coverage_); }
  CoverageMap& coverage() { return coverage_; }

 private:
  Word Load(const Address& a, const Word& key) const {
    auto it = journal_.storage.find(a);
    if (it != journal_.storage.end()) {
      auto jt = it->second.find(key);
      if (jt != it->second.end()) return jt->second;
    }
    return world_.Storage(a, key);
  }

  Word TLoad(const Address& a, const Word& key) const {
    auto it = journal_.transient.find({a, key});
    return it == journal_.transient.end() ? Word() : it->second;
  }

  const StateView& world_;
  const BlockContext& block_;
  Journal journal_;
  TraceSequence trace_;
  CoverageMap coverage_;
};

// Gas for growing memory so that [offset, offset + size) is addressable.
// Returns false when the range is beyond the memory cap.
bool MemoryCost(const Bytes& memory, const Word& offset, const Word& size, uint64_t& cost,
                uint64_t& new_size) {
  new_size = memory.size();
  cost = 0;
  if (size.IsZero()) return true;
  if (!offset.FitsU64() || !size.FitsU64()) return false;
  uint64_t off = offset.Low64();
  uint64_t len = size.Low64();
  if (off > kMemoryLimit || len > kMemoryLimit || off + len > kMemoryLimit) return false;
  uint64_t words = (off + len + 31) / 32;
  uint64_t current = memory.size() / 32;
  if (words > current) {
    cost = (words - current) * gas::kMemoryWord;
    new_size = words * 32;
  }
  return true;
}

Word ReadWord(const Bytes& src, uint64_t offset) {
  std::array<uint8_t, 32> buf{};
  for (size_t i = 0; i < 32 && offset < src.size() && offset + i < src.size(); ++i) {
    buf[i] = src[offset + i];
  }
  return Word::FromBigEndian(buf);
}

FrameOutcome Interpreter::RunFrame(const OpcodeSeq& code, const Address& self,
                                   const Address& caller, const Word& value, const Bytes& data,
                                   uint64_t gas, uint32_t depth) {
  const std::vector<bool> dests = JumpDestinations(code);
  std::vector<Word> stack;
  stack.reserve(32);
  Bytes memory;
  size_t pc = 0;
  int prev = -1;

  auto finish = [&](HaltKind kind, uint8_t opcode, Bytes ret, uint64_t gas_left) {
    coverage_.Insert(CoverageUnit::Halt(opcode, kind));
    return FrameOutcome{kind, std::move(ret), gas_left};
  };
  auto pop = [&stack]() {
    Word w = std::move(stack.back());
    stack.pop_back();
    return w;
  };

  for (;;) {
    if (pc >= code.size()) return finish(HaltKind::kStop, op::STOP, {}, gas);

    const uint8_t opcode = code.bytes[pc];
    const op::Info& info = op::GetInfo(opcode);
    if (prev >= 0) coverage_.Insert(CoverageUnit::Edge(static_cast<uint8_t>(prev), opcode));
    prev = opcode;

    const size_t idx = trace_.steps.size();
    {
      TraceStep step;
      step.depth = depth;
      step.pc = static_cast<uint32_t>(pc);
      step.opcode = opcode;
      step.gas_before = gas;
      step.stack_depth = static_cast<uint32_t>(stack.size());
      for (size_t i = 0; i < 4 && i < stack.size(); ++i) {
        step.stack_top.push_back(stack[stack.size() - 1 - i]);
      }
      if (int k = op::PushSize(opcode); k > 0) {
        step.push_data.assign(k, 0);
        for (int i = 0; i < k && pc + 1 + i < code.size(); ++i) {
          step.push_data[i] = code.bytes[pc + 1 + i];
        }
      }
      trace_.steps.push_back(std::move(step));
    }

    // Exceptional halts consume all remaining gas; the step carries it.
    auto fail = [&](HaltKind kind) {
      trace_.steps[idx].gas_cost = gas;
      return finish(kind, opcode, {}, 0);
    };
    auto out_of_gas = [&](uint64_t needed) {
      trace_.steps[idx].gas_cost = needed;
      return finish(HaltKind::kOutOfGas, opcode, {}, 0);
    };

    if (!info.supported || opcode == op::INVALID) return fail(HaltKind::kInvalidOpcode);
    if (stack.size() < info.inputs) return fail(HaltKind::kStackUnderflow);
    if (stack.size() - info.inputs + info.outputs > kStackLimit) {
      return fail(HaltKind::kStackOverflow);
    }

    // Charges `cost`; on success records it on the step.
    auto charge = [&](uint64_t cost) {
      if (cost > gas) return false;
      gas -= cost;
      trace_.steps[idx].gas_cost = cost;
      return true;
    };

    size_t next_pc = pc + 1;

    if (op::IsPush(opcode)) {
      if (!charge(gas::kBase)) return out_of_gas(gas::kBase);
      stack.push_back(Word::FromBigEndian(trace_.steps[idx].push_data));
      pc = pc + 1 + op::PushSize(opcode);
      continue;
    }
    if (op::IsDup(opcode)) {
      if (!charge(gas::kBase)) return out_of_gas(gas::kBase);
      int n = opcode - op::DUP1 + 1;
      stack.push_back(stack[stack.size() - n]);
      pc = next_pc;
      continue;
    }
    if (op::IsSwap(opcode)) {
      if (!charge(gas::kBase)) return out_of_gas(gas::kBase);
      int n = opcode - op::SWAP1 + 1;
      std::swap(stack.back(), stack[stack.size() - 1 - n]);
      pc = next_pc;
      continue;
    }

    switch (opcode) {
      case op::STOP:
        if (!charge(gas::kBase)) return out_of_gas(gas::kBase);
        return finish(HaltKind::kStop, opcode, {}, gas);

      case op::ADD: case op::MUL: case op::SUB: case op::DIV: case op::MOD:
      case op::LT: case op::GT: case op::EQ: case op::AND: case op::OR: case op::XOR: {
        if (!charge(gas::kBase)) return out_of_gas(gas::kBase);
        Word a = pop();
        Word b = pop();
        Word r;
        switch (opcode) {
          case op::ADD: r = a + b; break;
          case op::MUL: r = a * b; break;
          case op::SUB: r = a - b; break;
          case op::DIV: r = a / b; break;
          case op::MOD: r = a % b; break;
          case op::LT: r = Word(a < b ? 1 : 0); break;
          case op::GT: r = Word(a > b ? 1 : 0); break;
          case op::EQ: r = Word(a == b ? 1 : 0); break;
          case op::AND: r = a & b; break;
          case op::OR: r = a | b; break;
          default: r = a ^ b; break;
        }
        stack.push_back(r);
        break;
      }
      case op::ISZERO:
        if (!charge(gas::kBase)) return out_of_gas(gas::kBase);
        stack.back() = Word(stack.back().IsZero() ? 1 : 0);
        break;
      case op::NOT:
        if (!charge(gas::kBase)) return out_of_gas(gas::kBase);
        stack.back() = ~stack.back();
        break;

      case op::KECCAK256: {
        Word offset = stack[stack.size() - 1];
        Word size = stack[stack.size() - 2];
        uint64_t mem_cost, new_size;
        if (!MemoryCost(memory, offset, size, mem_cost, new_size)) return out_of_gas(gas + 1);
        uint64_t words = (size.Low64() + 31) / 32;
        uint64_t cost = gas::kKeccak + gas::kKeccakWord * words + mem_cost;
        if (!charge(cost)) return out_of_gas(cost);
        pop();
        pop();
        memory.resize(new_size, 0);
        std::span<const uint8_t> input;
        if (!size.IsZero()) input = std::span<const uint8_t>(memory).subspan(offset.Low64(), size.Low64());
        Hash32 h = Keccak256(input);
        stack.push_back(Word::FromBigEndian(h.bytes));
        break;
      }

      case op::ADDRESS:
        if (!charge(gas::kBase)) return out_of_gas(gas::kBase);
        stack.push_back(self.ToWord());
        break;
      case op::BALANCE:
        if (!charge(gas::kBase)) return out_of_gas(gas::kBase);
        stack.back() = Balance(Address::FromWord(stack.back()));
        break;
      case op::CALLER:
        if (!charge(gas::kBase)) return out_of_gas(gas::kBase);
        stack.push_back(caller.ToWord());
        break;
      case op::CALLVALUE:
        if (!charge(gas::kBase)) return out_of_gas(gas::kBase);
        stack.push_back(value);
        break;
      case op::CALLDATALOAD: {
        if (!charge(gas::kBase)) return out_of_gas(gas::kBase);
        Word offset = stack.back();
        stack.back() = offset.FitsU64() ? ReadWord(data, offset.Low64()) : Word();
        break;
      }
      case op::CALLDATASIZE:
        if (!charge(gas::kBase)) return out_of_gas(gas::kBase);
        stack.push_back(Word(data.size()));
        break;
      case op::TIMESTAMP:
        if (!charge(gas::kBase)) return out_of_gas(gas::kBase);
        stack.push_back(Word(block_.timestamp));
        break;
      case op::NUMBER:
        if (!charge(gas::kBase)) return out_of_gas(gas::kBase);
        stack.push_back(Word(block_.number));
        break;
      case op::GASLIMIT:
        if (!charge(gas::kBase)) return out_of_gas(gas::kBase);
        stack.push_back(Word(block_.gas_limit));
        break;
      case op::BASEFEE:
        if (!charge(gas::kBase)) return out_of_gas(gas::kBase);
        stack.push_back(block_.base_fee);
        break;

      case op::POP:
        if (!charge(gas::kBase)) return out_of_gas(gas::kBase);
        pop();
        break;

      case op::MLOAD: case op::MSTORE: {
        Word offset = stack.back();
        uint64_t mem_cost, new_size;
        if (!MemoryCost(memory, offset, Word(32), mem_cost, new_size)) return out_of_gas(gas + 1);
        uint64_t cost = gas::kBase + mem_cost;
        if (!charge(cost)) return out_of_gas(cost);
        memory.resize(new_size, 0);
        uint64_t off = offset.Low64();
        pop();
        if (opcode == op::MLOAD) {
          stack.push_back(ReadWord(memory, off));
        } else {
          auto be = pop().ToBigEndian();
          std::copy(be.begin(), be.end(), memory.begin() + off);
        }
        break;
      }

      case op::SLOAD: {
        if (!charge(gas::kLoad)) return out_of_gas(gas::kLoad);
        stack.back() = Load(self, stack.back());
        break;
      }
      case op::SSTORE: {
        if (!charge(gas::kStore)) return out_of_gas(gas::kStore);
        Word key = pop();
        Word val = pop();
        journal_.storage[self][key] = val;
        break;
      }
      case op::TLOAD:
        if (!charge(gas::kLoad)) return out_of_gas(gas::kLoad);
        stack.back() = TLoad(self, stack.back());
        break;
      case op::TSTORE: {
        if (!charge(gas::kStore)) return out_of_gas(gas::kStore);
        Word key = pop();
        Word val = pop();
        journal_.transient[{self, key}] = val;
        break;
      }

      case op::JUMP: case op::JUMPI: {
        if (!charge(gas::kBase)) return out_of_gas(gas::kBase);
        Word dest = pop();
        bool taken = true;
        if (opcode == op::JUMPI) taken = !pop().IsZero();
        if (taken) {
          if (!dest.FitsU64() || dest.Low64() >= code.size() || !dests[dest.Low64()]) {
            trace_.steps[idx].gas_cost = gas + gas::kBase;
            return finish(HaltKind::kInvalidJump, opcode, {}, 0);
          }
          next_pc = dest.Low64();
        }
        break;
      }

      case op::PC:
        if (!charge(gas::kBase)) return out_of_gas(gas::kBase);
        stack.push_back(Word(pc));
        break;
      case op::MSIZE:
        if (!charge(gas::kBase)) return out_of_gas(gas::kBase);
        stack.push_back(Word(memory.size()));
        break;
      case op::GAS:
        if (!charge(gas::kBase)) return out_of_gas(gas::kBase);
        stack.push_back(Word(gas));
        break;
      case op::JUMPDEST:
        if (!charge(gas::kJumpdest)) return out_of_gas(gas::kJumpdest);
        break;

      case op::CALL: {
        const size_t n = stack.size();
        Word gas_req = stack[n - 1];
        Address target = Address::FromWord(stack[n - 2]);
        Word call_value = stack[n - 3];
        Word args_off = stack[n - 4], args_size = stack[n - 5];
        Word ret_off = stack[n - 6], ret_size = stack[n - 7];

        uint64_t args_cost, args_mem, ret_cost, ret_mem;
        if (!MemoryCost(memory, args_off, args_size, args_cost, args_mem)) return out_of_gas(gas + 1);
        Bytes probe(args_mem);  // only its size matters for the second range
        if (!MemoryCost(probe, ret_off, ret_size, ret_cost, ret_mem)) return out_of_gas(gas + 1);
        uint64_t base = gas::kCall + args_cost + ret_cost;
        if (base > gas) return out_of_gas(base);
        gas -= base;
        memory.resize(std::max<uint64_t>(args_mem, ret_mem), 0);
        for (int i = 0; i < 7; ++i) pop();

        uint64_t forwarded = gas_req.FitsU64() ? std::min(gas_req.Low64(), gas) : gas;
        uint64_t spent = 0;
        Word ok = Word(0);
        if (depth + 1 > kMaxCallDepth) {
          coverage_.Insert(CoverageUnit::Halt(op::CALL, HaltKind::kDepthExceeded));
        } else if (Balance(self) < call_value) {
          // Insufficient balance: the call fails without running the callee.
        } else {
          Bytes args;
          if (!args_size.IsZero()) {
            args.assign(memory.begin() + args_off.Low64(),
                        memory.begin() + args_off.Low64() + args_size.Low64());
          }
          Journal snapshot = journal_;
          Transfer(self, target, call_value);
          FrameOutcome sub = RunFrame(world_.Code(target), target, self, call_value, args,
                                      forwarded, depth + 1);
          spent = forwarded - sub.gas_left;
          if (IsSuccess(sub.halt)) {
            ok = Word(1);
          } else {
            journal_ = std::move(snapshot);
          }
          if (!ret_size.IsZero()) {
            size_t copy = std::min<uint64_t>(ret_size.Low64(), sub.return_data.size());
            std::copy_n(sub.return_data.begin(), copy, memory.begin() + ret_off.Low64());
          }
        }
        gas -= spent;
        trace_.steps[idx].gas_cost = base + spent;
        stack.push_back(ok);
        break;
      }

      case op::RETURN: case op::REVERT: {
        Word offset = stack[stack.size() - 1];
        Word size = stack[stack.size() - 2];
        uint64_t mem_cost, new_size;
        if (!MemoryCost(memory, offset, size, mem_cost, new_size)) return out_of_gas(gas + 1);
        uint64_t cost = gas::kBase + mem_cost;
        if (!charge(cost)) return out_of_gas(cost);
        memory.resize(new_size, 0);
        Bytes ret;
        if (!size.IsZero()) {
          ret.assign(memory.begin() + offset.Low64(), memory.begin() + offset.Low64() + size.Low64());
        }
        return finish(opcode == op::RETURN ? HaltKind::kReturn : HaltKind::kRevert, opcode,
                      std::move(ret), gas);
      }

      default:
        return fail(HaltKind::kInvalidOpcode);
    }
    pc = next_pc;
  }
}

}  // namespace

ExecResult Execute(const OpcodeSeq& code, const ExecContext& ctx, const StateView& world) {
  if (!ctx.allow_gas_above_block_limit && ctx.gas_limit > ctx.block.gas_limit) {
    throw Error(Errc::kInvalidContext, "gas limit above block gas limit");
  }
  Interpreter interp(world, ctx.block);
  ExecResult result;
  if (interp.Balance(ctx.caller) < ctx.call_value) {
    result.halt = HaltKind::kRevert;
    return result;
  }
  interp.Transfer(ctx.caller, ctx.callee, ctx.call_value);
  FrameOutcome out =
      interp.RunFrame(code, ctx.callee, ctx.caller, ctx.call_value, ctx.call_data, ctx.gas_limit, 0);
  result.halt = out.halt;
  result.return_data = std::move(out.return_data);
  result.gas_used = ctx.gas_limit - out.gas_left;
  if (IsSuccess(out.halt)) result.state_delta = interp.BuildDelta();
  result.trace = interp.TakeTrace();
  result.coverage = interp.TakeCoverage();
  return result;
}

}  // namespace ctxfuzz
