#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ctxfuzz/chain.h"
#include "ctxfuzz/coverage.h"
#include "ctxfuzz/reform.h"
#include "ctxfuzz/rng.h"
#include "ctxfuzz/rpc/types.h"

namespace ctxfuzz {

// A transaction plus the code of the contract it calls.
struct SeedItem {
  Transaction tx;
  OpcodeSeq callee_code;

  friend bool operator==(const SeedItem&, const SeedItem&) = default;
};

// FIFO of seed transactions.
class SeedStream {
 public:
  SeedStream() = default;
  explicit SeedStream(std::vector<SeedItem> items) : items_(items.begin(), items.end()) {}

  // Throws Error(kStreamExhausted).
  SeedItem Pop();
  bool empty() const { return items_.empty(); }
  size_t size() const { return items_.size(); }
  const std::deque<SeedItem>& items() const { return items_; }

 private:
  std::deque<SeedItem> items_;
};

// Seed and corpus files share this object layout for transactions:
// {"from","to","value","data","gasLimit","maxFeePerGas","nonce"} with
// gasLimit and nonce as decimal numbers and everything else as hex.
rpc::Json TransactionToJson(const Transaction& tx);
// Throws Error(kSeedFormat) on missing, malformed or unknown keys, except
// the names listed in `extra_keys`.
Transaction TransactionFromJson(const rpc::Json& j, std::span<const std::string_view> extra_keys = {});

rpc::Json SeedToJson(const SeedItem& seed);
SeedItem SeedFromJson(const rpc::Json& j);
// One JSON object per line; blank lines are ignored. Throws Error(kSeedFormat)
// naming the line, or Error(kIo).
SeedStream LoadSeedFile(const std::string& path);
void SaveSeedFile(const std::string& path, const SeedStream& stream);

struct SynthesisOptions {
  uint32_t max_blocks = 6;      // JUMPDEST-separated regions per contract
  uint32_t max_statements = 8;  // per region
  // Chance that a contract reads PC, GAS or MSIZE.
  double position_sensitive = 0.1;
  uint64_t tx_gas = 1'000'000;
};

// Random contract with forward jumps to real JUMPDESTs and statements that
// never underflow the stack. `callees` are CALL targets.
OpcodeSeq SynthesizeContract(Rng& rng, std::span<const Address> callees,
                             const SynthesisOptions& opts = {});

// Deploys `count` synthesized contracts from the first funded account and
// submits one call to each from the funded accounts in turn. The stream holds
// those calls in submission order.
SeedStream SynthesizeSeedStream(uint64_t seed, size_t count, Network& network,
                                const SynthesisOptions& opts = {});

// Where seed transactions are executed to measure their coverage.
class ReplayContext {
 public:
  virtual ~ReplayContext() = default;
  virtual ExecResult Replay(const SeedItem& seed) const = 0;
};

// Transactions found on the chain run in their recorded pre-state and block;
// anything else runs against the head state in the next block's context.
class ChainReplay : public ReplayContext {
 public:
  explicit ChainReplay(const Network& network) : network_(&network) {}
  ExecResult Replay(const SeedItem& seed) const override;

 private:
  const Network* network_;
};

// Runs against a fixed world with the seed's callee code installed.
class WorldReplay : public ReplayContext {
 public:
  WorldReplay(const StateView& world, BlockContext block) : world_(&world), block_(block) {}
  ExecResult Replay(const SeedItem& seed) const override;

 private:
  const StateView* world_;
  BlockContext block_;
};

struct CorpusConfig {
  uint64_t coverage_threshold = 500;  // absolute coverage units
  size_t max_selected = 1000;

  // Throws Error(kConfigInvalid).
  void Validate() const;
};

struct CorpusEntry {
  Transaction tx;
  OpcodeSeq callee_code;
  CoverageMap coverage;
  std::set<uint8_t> executed_opcodes;  // every frame of the trace
  std::optional<LinearSequence> reformed;

  friend bool operator==(const CorpusEntry&, const CorpusEntry&) = default;
};

struct CorpusState {
  std::vector<CorpusEntry> selected;
  std::set<uint8_t> seen_opcodes;
  CoverageMap accumulated;

  friend bool operator==(const CorpusState&, const CorpusState&) = default;
};

struct SelectionStats {
  size_t popped = 0;
  size_t skipped_by_opcode_gate = 0;
  size_t executed = 0;
  size_t recorded = 0;
};

// Greedy coverage-driven selection: a seed is executed only if its callee code
// has an opcode not yet executed, and kept only if it adds coverage. Stops at
// the coverage threshold, at max_selected entries or when the stream runs dry.
// Kept entries carry the reformed form of their outermost frame.
CorpusState SelectInitialCorpus(SeedStream& stream, const CorpusConfig& config,
                                const ReplayContext& replay, SelectionStats* stats = nullptr);

rpc::Json CorpusEntryToJson(const CorpusEntry& entry);
CorpusEntry CorpusEntryFromJson(const rpc::Json& j);

// `dir`/entries.jsonl, one entry per line. Loading rebuilds the accumulated
// coverage and opcode set. Throw Error(kIo) or Error(kSeedFormat).
void SaveCorpus(const std::string& dir, const CorpusState& state);
CorpusState LoadCorpus(const std::string& dir);

}  // namespace ctxfuzz
