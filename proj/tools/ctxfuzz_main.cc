// Command-line front end: corpus selection, fuzzing campaigns, replay,
// reform checks and stats.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "ctxfuzz/campaign.h"
#include "ctxfuzz/error.h"
#include "ctxfuzz/reform.h"

namespace {

namespace fs = std::filesystem;
using namespace ctxfuzz;

constexpr int kOk = 0;
constexpr int kOperational = 1;
constexpr int kConfigError = 2;

bool IsConfigError(Errc code) {
  switch (code) {
    case Errc::kConfigInvalid:
    case Errc::kSeedMismatch:
    case Errc::kRulesFormat:
    case Errc::kZeroClients:
    case Errc::kDuplicateClientId:
    case Errc::kReferenceHasFaults:
      return true;
    default:
      return false;
  }
}

std::string OutPath(const CampaignConfig& cfg, const std::string& explicit_path, const char* name) {
  if (!explicit_path.empty()) return explicit_path;
  if (cfg.out_dir.empty()) throw Error(Errc::kConfigInvalid, std::string("outDir is not set and no ") + name + " path given");
  return (fs::path(cfg.out_dir) / name).string();
}

int CorpusSelect(const CampaignConfig& cfg) {
  cfg.Validate(false);
  std::string dir = OutPath(cfg, "", "corpus");
  ContextBuilder builder(cfg, cfg.rng_seed);
  builder.SelectCorpus();
  SaveCorpus(dir, builder.corpus());
  std::cout << "selected: " << builder.corpus().selected.size() << "\n"
            << "coverage: " << builder.corpus().accumulated.size() << "\n"
            << "corpus: " << dir << "\n";
  return kOk;
}

int Fuzz(const CampaignConfig& cfg) {
  CampaignResult result = RunCampaign(cfg);
  for (const oracle::DivergenceReport& r : result.reports) {
    std::cout << "report " << r.signature.Hex().substr(0, 18) << " " << r.divergence.call.method
              << " block " << r.context_block << " paths";
    for (const std::string& p : r.divergence.diff_paths) std::cout << " " << p;
    std::cout << "\n";
  }
  std::cout << result.stats.ToJson().dump(2) << "\n";
  return kOk;
}

int ReplayReports(const CampaignConfig& cfg, const std::string& path) {
  std::vector<ReplayVerdict> verdicts = Replay(OutPath(cfg, path, "reports.jsonl"), cfg);
  size_t reproduced = 0;
  for (const ReplayVerdict& v : verdicts) {
    bool ok = v.verdict == Verdict::kReproduced;
    reproduced += ok;
    std::cout << (ok ? "Reproduced " : "NotReproduced ") << v.signature.Hex().substr(0, 18) << " "
              << v.method;
    if (!ok) std::cout << " (" << v.detail << ")";
    std::cout << "\n";
  }
  std::cout << "reproduced: " << reproduced << "/" << verdicts.size() << "\n";
  return kOk;
}

// Rebuilds the chain the corpus came from: seed selection, then mutation
// rounds until every entry's transaction is on the chain.
int ReformCheck(const CampaignConfig& cfg, const std::string& corpus_dir) {
  cfg.Validate(false);
  CorpusState corpus = LoadCorpus(OutPath(cfg, corpus_dir, "corpus"));
  ContextBuilder builder(cfg, cfg.rng_seed);
  builder.SelectCorpus();
  const Network& net = builder.network();
  auto all_on_chain = [&] {
    for (const CorpusEntry& e : corpus.selected) {
      if (!net.FindTransaction(e.tx.Hash())) return false;
    }
    return true;
  };
  for (size_t round = 0; round < cfg.context_rounds && !all_on_chain(); ++round) builder.Round(round);

  size_t equivalent = 0, checked = 0, skipped = 0, unavailable = 0;
  for (const CorpusEntry& e : corpus.selected) {
    if (!e.reformed) {
      ++skipped;
      continue;
    }
    try {
      EquivalenceVerdict v = CheckEquivalence(e.tx, *e.reformed, net);
      if (v.skipped) {
        ++skipped;
        continue;
      }
      ++checked;
      if (v.equivalent) {
        ++equivalent;
      } else {
        std::cout << "mismatch " << e.tx.Hash().Hex();
        if (v.mismatch) std::cout << " " << v.mismatch->detail;
        std::cout << "\n";
      }
    } catch (const Error& err) {
      if (err.code() != Errc::kContextUnavailable) throw;
      ++unavailable;
    }
  }
  std::cout << "equivalent: " << equivalent << "/" << checked << "\n"
            << "skipped: " << skipped << "\n";
  if (unavailable) std::cout << "context unavailable: " << unavailable << "\n";
  return equivalent == checked && unavailable == 0 ? kOk : kOperational;
}

int Stats(const CampaignConfig& cfg, const std::string& path) {
  std::string file = OutPath(cfg, path, "stats.json");
  std::ifstream in(file);
  if (!in) throw Error(Errc::kIo, "cannot read " + file);
  std::stringstream text;
  text << in.rdbuf();
  CampaignStats::FromJson(rpc::Json::parse(text.str(), nullptr, false));
  std::cout << text.str();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differential fuzzer for context-dependent RPC divergences"};
  app.set_config("--config", "", "Key-value config file; every key is also a flag");
  app.require_subcommand(1);
  app.fallthrough();

  CampaignConfig cfg;
  std::vector<std::string> clients = {"ref"};
  app.add_option("--rngSeed", cfg.rng_seed, "Campaign seed");
  app.add_option("--coverageThreshold", cfg.corpus.coverage_threshold, "Corpus selection stops at this coverage");
  app.add_option("--maxSelected", cfg.corpus.max_selected, "Corpus size cap");
  app.add_option("--seedCount", cfg.seed_count, "Synthesized seed transactions");
  app.add_option("--seedFile", cfg.seed_file, "Seed JSONL file replacing the synthesized seeds");
  app.add_option("--blockInsert", cfg.weights.block_insert, "Mutation weight");
  app.add_option("--blockDelete", cfg.weights.block_delete, "Mutation weight");
  app.add_option("--opInsert", cfg.weights.op_insert, "Mutation weight");
  app.add_option("--opDelete", cfg.weights.op_delete, "Mutation weight");
  app.add_option("--stateAware", cfg.state_aware, "State-aware operand seeding (true/false)");
  app.add_option("--mutationBudget", cfg.mutation_budget, "Mutations per context round");
  app.add_option("--callsPerContext", cfg.calls_per_context, "RPC calls per context round");
  app.add_option("--contextRounds", cfg.context_rounds, "Context rounds");
  app.add_option("--clients", clients, "Client specs, reference first: id or id:F1+F4");
  app.add_option("--rulesFile", cfg.rules_file, "Benign rules file (default: shipped rules)");
  app.add_option("--outDir", cfg.out_dir, "Output directory");
  app.add_option("--workers", cfg.workers, "Independent worker campaigns");
  app.add_option("--fundedAccounts", cfg.funded_accounts, "Funded genesis accounts");

  CLI::App* corpus = app.add_subcommand("corpus", "Corpus operations");
  corpus->require_subcommand(1);
  CLI::App* select = corpus->add_subcommand("select", "Select the initial corpus into outDir/corpus");
  CLI::App* fuzz = app.add_subcommand("fuzz", "Run a campaign");
  std::string replay_path, corpus_dir, stats_path;
  CLI::App* replay = app.add_subcommand("replay", "Re-check stored reports");
  replay->add_option("reports", replay_path, "reports.jsonl (default: outDir/reports.jsonl)");
  CLI::App* reform = app.add_subcommand("reform-check", "Equivalence of every reformed corpus entry");
  reform->add_option("--corpus", corpus_dir, "Corpus directory (default: outDir/corpus)");
  CLI::App* stats = app.add_subcommand("stats", "Print stats.json");
  stats->add_option("path", stats_path, "stats.json (default: outDir/stats.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    cfg.clients.clear();
    for (const std::string& c : clients) cfg.clients.push_back(ParseClientSpec(c));
    if (*select) return CorpusSelect(cfg);
    if (*fuzz) return Fuzz(cfg);
    if (*replay) return ReplayReports(cfg, replay_path);
    if (*reform) return ReformCheck(cfg, corpus_dir);
    if (*stats) return Stats(cfg, stats_path);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return IsConfigError(e.code()) ? kConfigError : kOperational;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kOperational;
  }
  return kOk;
}
