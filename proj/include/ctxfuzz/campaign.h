#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ctxfuzz/chain.h"
#include "ctxfuzz/corpus.h"
#include "ctxfuzz/mutate.h"
#include "ctxfuzz/oracle.h"
#include "ctxfuzz/rpc/types.h"

namespace ctxfuzz {

struct CampaignConfig {
  uint64_t rng_seed = 1;
  CorpusConfig corpus;
  size_t seed_count = 200;  // synthesized seed transactions
  std::string seed_file;    // when set, replaces the synthesized stream
  MutationWeights weights;
  bool state_aware = true;
  size_t mutation_budget = 500;  // per context round
  size_t calls_per_context = 256;
  size_t context_rounds = 1;
  std::vector<ClientHandle> clients = {{"ref", {}}};
  std::string rules_file;  // empty: the shipped default rules
  std::string out_dir;     // empty: nothing is written
  size_t workers = 1;
  size_t funded_accounts = 4;

  // Throws Error(kConfigInvalid). Fuzzing needs at least two clients.
  void Validate(bool fuzz_mode) const;
  rpc::Json ToJson() const;
  static CampaignConfig FromJson(const rpc::Json& j);

  NetworkConfig MakeNetworkConfig() const;
  oracle::NormalizationRules Rules() const;
};

struct CampaignStats {
  size_t contexts = 0;
  size_t mutants_generated = 0;
  size_t mutants_interesting = 0;
  size_t mutants_deployed = 0;
  size_t rpc_calls_sent = 0;
  size_t divergences = 0;
  size_t deduped_reports = 0;
  size_t coverage_cardinality = 0;
  double wall_clock = 0;  // seconds

  rpc::Json ToJson() const;
  static CampaignStats FromJson(const rpc::Json& j);
};

struct CampaignResult {
  CampaignStats stats;
  std::vector<oracle::DivergenceReport> reports;  // merged, in discovery order
  std::vector<size_t> report_workers;             // worker index per report
};

// Phase 1 of one worker: the network, seed selection and the mutation rounds.
// Everything is a function of the config and the worker seed.
class ContextBuilder {
 public:
  ContextBuilder(const CampaignConfig& config, uint64_t seed);

  // Seed synthesis (or loading) and initial corpus selection.
  void SelectCorpus();
  // One call to FuzzContextLoop with a round-derived seed.
  MutantStats Round(size_t round);

  Network& network() { return network_; }
  const CorpusState& corpus() const { return corpus_; }
  // Call transactions of every deployed mutant so far.
  const std::vector<Transaction>& mutant_calls() const { return mutant_calls_; }

 private:
  const CampaignConfig& config_;
  uint64_t seed_;
  Network network_;
  CorpusState corpus_;
  std::vector<BasicBlock> block_corpus_;
  std::vector<Transaction> mutant_calls_;
};

// Worker w seeds with rng_seed itself when alone, else with a derived seed.
uint64_t WorkerSeed(const CampaignConfig& config, size_t worker);

// The three-stage pipeline over context_rounds rounds and `workers` cloned
// networks. With out_dir set, writes reports.jsonl, stats.json, manifest.json
// and corpus/.
CampaignResult RunCampaign(const CampaignConfig& config);

enum class Verdict { kReproduced, kNotReproduced };

struct ReplayVerdict {
  Hash32 signature;
  std::string method;
  Verdict verdict = Verdict::kNotReproduced;
  std::string detail;
};

// Rebuilds each worker's chain from the seed recorded in the manifest next to
// `report_path`, re-dispatches every report's call in its context block with
// `config`'s clients and rules, and checks for the same signature. Throws
// Error(kSeedMismatch) when config.rng_seed differs from the manifest.
std::vector<ReplayVerdict> Replay(const std::string& report_path, const CampaignConfig& config);

}  // namespace ctxfuzz
