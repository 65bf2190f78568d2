#pragma once

#include <cstdint>
#include <vector>

#include "ctxfuzz/code.h"
#include "ctxfuzz/coverage.h"
#include "ctxfuzz/state.h"
#include "ctxfuzz/word.h"

namespace ctxfuzz {

struct BlockContext {
  uint64_t number = 0;
  uint64_t timestamp = 0;  // seconds
  Word base_fee;
  uint64_t gas_limit = 0;
  Hash32 parent_hash;

  friend bool operator==(const BlockContext&, const BlockContext&) = default;
};

struct ExecContext {
  Address caller;
  Address callee;
  Word call_value;
  Bytes call_data;
  BlockContext block;
  uint64_t gas_limit = 0;
  // Allows gas_limit above block.gas_limit (RPC gas caps, fault F1).
  bool allow_gas_above_block_limit = false;
};

struct TraceStep {
  uint32_t depth = 0;
  uint32_t pc = 0;
  uint8_t opcode = 0;
  uint64_t gas_before = 0;
  uint64_t gas_cost = 0;
  uint32_t stack_depth = 0;     // items on the stack before the step
  std::vector<Word> stack_top;  // up to 4 items, top of stack first
  Bytes push_data;              // operand bytes for PUSHk

  friend bool operator==(const TraceStep&, const TraceStep&) = default;
};

struct TraceSequence {
  std::vector<TraceStep> steps;

  friend bool operator==(const TraceSequence&, const TraceSequence&) = default;
};

struct ExecResult {
  HaltKind halt = HaltKind::kStop;
  Bytes return_data;
  uint64_t gas_used = 0;
  TraceSequence trace;
  StateDelta state_delta;  // empty unless the halt committed
  CoverageMap coverage;

  friend bool operator==(const ExecResult&, const ExecResult&) = default;
};

namespace gas {
inline constexpr uint64_t kTransaction = 21000;
inline constexpr uint64_t kBase = 3;
inline constexpr uint64_t kJumpdest = 1;
inline constexpr uint64_t kLoad = 20;    // SLOAD, TLOAD
inline constexpr uint64_t kStore = 100;  // SSTORE, TSTORE
inline constexpr uint64_t kMemoryWord = 3;
inline constexpr uint64_t kKeccak = 30;
inline constexpr uint64_t kKeccakWord = 6;
inline constexpr uint64_t kCall = 100;
}  // namespace gas

inline constexpr size_t kStackLimit = 1024;
inline constexpr uint32_t kMaxCallDepth = 16;
inline constexpr uint64_t kMemoryLimit = uint64_t{1} << 22;

// Runs `code` as the callee of `ctx` against `world`. Deterministic; all
// failures are reported through ExecResult::halt. The caller's value is
// transferred to the callee as part of the frame.
ExecResult Execute(const OpcodeSeq& code, const ExecContext& ctx, const StateView& world);

}  // namespace ctxfuzz
