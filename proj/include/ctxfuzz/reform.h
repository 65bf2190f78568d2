#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ctxfuzz/chain.h"
#include "ctxfuzz/code.h"
#include "ctxfuzz/evm.h"

namespace ctxfuzz {

// Branch-free code: never contains JUMP or JUMPI. JUMPDEST bytes remain as
// block separators.
struct LinearSequence {
  OpcodeSeq ops;
  std::optional<Hash32> provenance;  // hash of the transaction it came from

  friend bool operator==(const LinearSequence&, const LinearSequence&) = default;
};

// Steps of the outermost frame. CALL steps stay; the callee's steps go.
// Throws Error(kEmptyTrace).
TraceSequence ExtractTrace(const ExecResult& result);

struct ReformOutput {
  LinearSequence seq;
  // origin[i] is the trace step index that produced instruction i.
  std::vector<size_t> origin;
};

// JUMP becomes POP, JUMPI becomes POP POP, then adjacent PUSHk/POP pairs are
// removed until none remain.
ReformOutput ReformWithOrigins(const TraceSequence& trace);
LinearSequence Reform(const TraceSequence& trace);

struct BasicBlock {
  OpcodeSeq ops;
  int net_stack_effect = 0;
  unsigned min_stack_depth = 0;  // items needed on entry

  static BasicBlock FromOps(OpcodeSeq ops);
  friend bool operator==(const BasicBlock&, const BasicBlock&) = default;
};

// Splits at JUMPDEST bytes; the separators belong to no block and empty
// blocks are dropped.
std::vector<BasicBlock> SegmentBlocks(const LinearSequence& seq);
// Inverse of SegmentBlocks: blocks joined by single JUMPDEST separators.
LinearSequence JoinBlocks(const std::vector<BasicBlock>& blocks);

struct EquivalenceVerdict {
  enum class Field { kReturnData, kStorageDelta, kHaltKind };
  struct Mismatch {
    Field field;
    std::string detail;
  };

  bool equivalent = false;
  bool skipped = false;
  std::string skip_reason;
  std::optional<Mismatch> mismatch;
};

// Re-runs `original` in its on-chain pre-state twice, once with the recorded
// callee code and once with `reformed` installed at the callee, and compares
// return data, storage writes and halt kind. Gas is not compared. Skips
// traces using PC, GAS or MSIZE, deployments, originals that ended in
// InvalidJump or OutOfGas, and calls back into the callee. Throws
// Error(kContextUnavailable) if `original` is not on the chain.
EquivalenceVerdict CheckEquivalence(const Transaction& original, const LinearSequence& reformed,
                                    const Network& network);

}  // namespace ctxfuzz
