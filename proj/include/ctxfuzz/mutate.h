#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <vector>

#include "ctxfuzz/chain.h"
#include "ctxfuzz/corpus.h"
#include "ctxfuzz/reform.h"
#include "ctxfuzz/rng.h"

namespace ctxfuzz {

// Storage and memory locations a branch-free sequence writes with constant
// keys or offsets.
struct StateLocations {
  std::set<Word> storage_keys;
  std::set<Word> transient_keys;
  std::set<uint64_t> mem_offsets;
  uint64_t mem_high_water = 0;  // one past the highest byte written

  friend bool operator==(const StateLocations&, const StateLocations&) = default;
};

// Forward pass over an abstract stack where only PUSH results are known.
// Missing operands read as unknown.
StateLocations AnalyzeUsedLocations(const LinearSequence& seq);

struct MutationWeights {
  double block_insert = 0.3;
  double block_delete = 0.2;
  double op_insert = 0.3;
  double op_delete = 0.2;
};

// Every supported opcode except JUMP and JUMPI.
std::vector<uint8_t> DefaultOpcodeCorpus();

struct MutationConfig {
  std::vector<BasicBlock> block_corpus;
  std::vector<uint8_t> opcode_corpus = DefaultOpcodeCorpus();
  MutationWeights weights;
  uint64_t rng_seed = 0;
  bool state_aware = true;
  // Defaults: the first funded account deploys, the others send calls.
  std::optional<Address> deployer;
  std::vector<Address> senders;

  // Throws Error(kConfigInvalid).
  void Validate() const;
};

// Distinct non-empty blocks of every reformed entry, in corpus order.
std::vector<BasicBlock> BuildBlockCorpus(const CorpusState& corpus);

enum class Edit { kInsert, kDelete };

// Inserts a corpus block at a block boundary or deletes one block. Deleting
// from an empty sequence inserts instead; inserting with an empty block
// corpus returns the input.
LinearSequence MutateBlockLevel(const LinearSequence& seq, const MutationConfig& cfg, Rng& rng,
                                Edit edit);
// Picks the edit by the block_insert : block_delete weights.
LinearSequence MutateBlockLevel(const LinearSequence& seq, const MutationConfig& cfg, Rng& rng);

// Code inserted for `opcode`: PUSHk gets a random operand; with state_aware,
// SLOAD/TLOAD/MLOAD get a known key or offset pushed first and KECCAK256 gets
// size 32 and a known offset.
OpcodeSeq InsertionSnippet(uint8_t opcode, const StateLocations& locs, const MutationConfig& cfg,
                           Rng& rng);

// Inserts a snippet at a random instruction boundary or deletes one
// instruction. Deleting from an empty sequence inserts instead.
LinearSequence MutateOpcodeLevel(const LinearSequence& seq, const StateLocations& locs,
                                 const MutationConfig& cfg, Rng& rng, Edit edit);
LinearSequence MutateOpcodeLevel(const LinearSequence& seq, const StateLocations& locs,
                                 const MutationConfig& cfg, Rng& rng);

// Executes a call transaction against `snapshot` in `block` without any
// validation or bookkeeping beyond the block gas cap. Throws
// Error(kMissingCallee) when the callee account does not exist.
ExecResult SimulateOffChain(const Transaction& tx, const StateView& snapshot,
                            const BlockContext& block);

struct MutantStats {
  size_t generated = 0;
  size_t interesting = 0;
  size_t deployed = 0;
  size_t invalid_halts = 0;  // halts other than Stop, Return and Revert
};

struct ContextArtifacts {
  std::vector<Transaction> deployed_txs;  // deployment then call, per mutant
  CoverageMap final_coverage;
  MutantStats stats;
};

// Coverage-gated context generation. Each iteration mutates a uniformly
// chosen corpus entry (or the empty sequence when the corpus is empty),
// simulates its deployment and call off-chain, and only when the call adds
// coverage submits both to `network` and appends the mutant to `corpus`.
// Throws Error(kEmptyInitialState) when there is nothing to mutate from.
ContextArtifacts FuzzContextLoop(CorpusState& corpus, size_t budget, Network& network,
                                 const MutationConfig& cfg);

}  // namespace ctxfuzz
