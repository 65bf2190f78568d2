#include "ctxfuzz/campaign.h"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>

#include "ctxfuzz/client.h"
#include "ctxfuzz/error.h"
#include "ctxfuzz/rng.h"
#include "ctxfuzz/rpc/generate.h"
#include "ctxfuzz/rpc/schema.h"

namespace ctxfuzz {
namespace {

namespace fs = std::filesystem;
using rpc::Json;

const Word kFunding = Word::FromHex("0xd3c21bcecceda1000000");

void Require(bool ok, const std::string& what) {
  if (!ok) throw Error(Errc::kConfigInvalid, what);
}

template <typename T>
T Field(const Json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const Json::exception&) {
    throw Error(Errc::kConfigInvalid, std::string("bad value for ") + key);
  }
}

void WriteFile(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error(Errc::kIo, "cannot write " + path.string());
}

Json ReadJsonFile(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIo, "cannot read " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(Errc::kIo, path.string() + ": " + e.what());
  }
}

std::map<std::string, rpc::RpcResponse> DispatchAll(const Network& net, const rpc::RpcCall& call) {
  std::map<std::string, rpc::RpcResponse> out;
  for (const ClientHandle& c : net.clients()) out.emplace(c.id, Dispatch(c, net, call));
  return out;
}

struct WorkerOutput {
  CampaignStats stats;
  std::vector<oracle::DivergenceReport> reports;
  CorpusState corpus;
};

WorkerOutput RunWorker(const CampaignConfig& cfg, size_t worker,
                       const oracle::NormalizationRules& rules) {
  uint64_t seed = WorkerSeed(cfg, worker);
  ContextBuilder builder(cfg, seed);
  builder.SelectCorpus();
  const Network& net = builder.network();
  const rpc::SchemaRegistry& reg = rpc::SchemaRegistry::Builtin();
  const std::vector<std::string>& methods = reg.methods();

  WorkerOutput out;
  oracle::ReportStore store;
  uint64_t seq = 0;
  for (size_t round = 0; round < cfg.context_rounds; ++round) {
    MutantStats ms = builder.Round(round);
    out.stats.mutants_generated += ms.generated;
    out.stats.mutants_interesting += ms.interesting;
    out.stats.mutants_deployed += ms.deployed;

    rpc::ContextView view = rpc::ContextView::FromNetwork(net, builder.mutant_calls());
    Rng rng(DeriveSeed(seed, "rpc", round));
    for (size_t i = 0; i < cfg.calls_per_context; ++i, ++seq) {
      const rpc::MethodSchema& schema = reg.Get(methods[seq % methods.size()]);
      rpc::RpcCall call = rpc::GenerateCall(schema, view, rng, seq + 1);
      auto responses = DispatchAll(net, call);
      ++out.stats.rpc_calls_sent;
      std::optional<oracle::Divergence> d = oracle::Compare(call, responses, rules);
      if (!d) continue;
      ++out.stats.divergences;
      oracle::DivergenceReport report;
      report.signature = oracle::Signature(*d);
      report.divergence = std::move(*d);
      report.context_block = net.head_number();
      report.context_hash = net.head().hash;
      report.first_seen = seq;
      store.Record(report);
    }
    ++out.stats.contexts;
  }
  out.reports = store.reports();
  out.corpus = builder.corpus();
  return out;
}

}  // namespace

void CampaignConfig::Validate(bool fuzz_mode) const {
  corpus.Validate();
  Require(context_rounds >= 1, "contextRounds must be at least 1");
  Require(workers >= 1, "workers must be at least 1");
  Require(funded_accounts >= 2, "fundedAccounts must be at least 2");
  Require(!clients.empty(), "no clients configured");
  if (fuzz_mode) Require(clients.size() >= 2, "fuzzing needs at least two clients");
  Require(clients.front().faults.empty(), "the first client is the reference and takes no faults");
  MutationConfig m;
  m.weights = weights;
  m.Validate();
}

Json CampaignConfig::ToJson() const {
  Json j = Json::object();
  j["rngSeed"] = rng_seed;
  j["coverageThreshold"] = corpus.coverage_threshold;
  j["maxSelected"] = corpus.max_selected;
  j["seedCount"] = seed_count;
  j["seedFile"] = seed_file;
  j["blockInsert"] = weights.block_insert;
  j["blockDelete"] = weights.block_delete;
  j["opInsert"] = weights.op_insert;
  j["opDelete"] = weights.op_delete;
  j["stateAware"] = state_aware;
  j["mutationBudget"] = mutation_budget;
  j["callsPerContext"] = calls_per_context;
  j["contextRounds"] = context_rounds;
  Json cs = Json::array();
  for (const ClientHandle& c : clients) cs.push_back(ClientSpecString(c));
  j["clients"] = cs;
  j["rulesFile"] = rules_file;
  j["outDir"] = out_dir;
  j["workers"] = workers;
  j["fundedAccounts"] = funded_accounts;
  return j;
}

CampaignConfig CampaignConfig::FromJson(const Json& j) {
  if (!j.is_object()) throw Error(Errc::kConfigInvalid, "config is not an object");
  CampaignConfig c;
  c.rng_seed = Field(j, "rngSeed", c.rng_seed);
  c.corpus.coverage_threshold = Field(j, "coverageThreshold", c.corpus.coverage_threshold);
  c.corpus.max_selected = Field(j, "maxSelected", c.corpus.max_selected);
  c.seed_count = Field(j, "seedCount", c.seed_count);
  c.seed_file = Field(j, "seedFile", c.seed_file);
  c.weights.block_insert = Field(j, "blockInsert", c.weights.block_insert);
  c.weights.block_delete = Field(j, "blockDelete", c.weights.block_delete);
  c.weights.op_insert = Field(j, "opInsert", c.weights.op_insert);
  c.weights.op_delete = Field(j, "opDelete", c.weights.op_delete);
  c.state_aware = Field(j, "stateAware", c.state_aware);
  c.mutation_budget = Field(j, "mutationBudget", c.mutation_budget);
  c.calls_per_context = Field(j, "callsPerContext", c.calls_per_context);
  c.context_rounds = Field(j, "contextRounds", c.context_rounds);
  if (j.contains("clients")) {
    c.clients.clear();
    for (const std::string& s : Field(j, "clients", std::vector<std::string>{}))
      c.clients.push_back(ParseClientSpec(s));
  }
  c.rules_file = Field(j, "rulesFile", c.rules_file);
  c.out_dir = Field(j, "outDir", c.out_dir);
  c.workers = Field(j, "workers", c.workers);
  c.funded_accounts = Field(j, "fundedAccounts", c.funded_accounts);
  return c;
}

NetworkConfig CampaignConfig::MakeNetworkConfig() const {
  NetworkConfig n;
  n.clients = clients;
  // 0x1000...00NN with NN = i + 1.
  for (size_t i = 0; i < funded_accounts; ++i) {
    Address a;
    a.bytes[0] = 0x10;
    a.bytes[18] = static_cast<uint8_t>((i + 1) >> 8);
    a.bytes[19] = static_cast<uint8_t>(i + 1);
    n.accounts[a] = kFunding;
  }
  return n;
}

oracle::NormalizationRules CampaignConfig::Rules() const {
  if (rules_file.empty()) return oracle::NormalizationRules::Default();
  return oracle::NormalizationRules::LoadFile(rules_file);
}

Json CampaignStats::ToJson() const {
  Json j = Json::object();
  j["contexts"] = contexts;
  j["mutantsGenerated"] = mutants_generated;
  j["mutantsInteresting"] = mutants_interesting;
  j["mutantsDeployed"] = mutants_deployed;
  j["rpcCallsSent"] = rpc_calls_sent;
  j["divergences"] = divergences;
  j["dedupedReports"] = deduped_reports;
  j["coverageCardinality"] = coverage_cardinality;
  j["wallClock"] = wall_clock;
  return j;
}

CampaignStats CampaignStats::FromJson(const Json& j) {
  CampaignStats s;
  try {
    s.contexts = j.at("contexts").get<size_t>();
    s.mutants_generated = j.at("mutantsGenerated").get<size_t>();
    s.mutants_interesting = j.at("mutantsInteresting").get<size_t>();
    s.mutants_deployed = j.at("mutantsDeployed").get<size_t>();
    s.rpc_calls_sent = j.at("rpcCallsSent").get<size_t>();
    s.divergences = j.at("divergences").get<size_t>();
    s.deduped_reports = j.at("dedupedReports").get<size_t>();
    s.coverage_cardinality = j.at("coverageCardinality").get<size_t>();
    s.wall_clock = j.at("wallClock").get<double>();
  } catch (const Json::exception& e) {
    throw Error(Errc::kIo, std::string("bad stats: ") + e.what());
  }
  return s;
}

ContextBuilder::ContextBuilder(const CampaignConfig& config, uint64_t seed)
    : config_(config), seed_(seed), network_(config.MakeNetworkConfig()) {}

void ContextBuilder::SelectCorpus() {
  if (config_.seed_file.empty()) {
    SeedStream stream = SynthesizeSeedStream(DeriveSeed(seed_, "seeds"), config_.seed_count, network_);
    corpus_ = SelectInitialCorpus(stream, config_.corpus, ChainReplay(network_));
  } else {
    SeedStream stream = LoadSeedFile(config_.seed_file);
    corpus_ = SelectInitialCorpus(stream, config_.corpus,
                                  WorldReplay(network_.world(), network_.NextBlockContext()));
  }
}

MutantStats ContextBuilder::Round(size_t round) {
  MutationConfig m;
  m.block_corpus = BuildBlockCorpus(corpus_);
  m.weights = config_.weights;
  m.state_aware = config_.state_aware;
  m.rng_seed = DeriveSeed(seed_, "mutate", round);
  ContextArtifacts art = FuzzContextLoop(corpus_, config_.mutation_budget, network_, m);
  for (size_t i = 1; i < art.deployed_txs.size(); i += 2) mutant_calls_.push_back(art.deployed_txs[i]);
  return art.stats;
}

uint64_t WorkerSeed(const CampaignConfig& config, size_t worker) {
  return config.workers == 1 ? config.rng_seed : DeriveSeed(config.rng_seed, "worker", worker);
}

CampaignResult RunCampaign(const CampaignConfig& config) {
  config.Validate(true);
  auto start = std::chrono::steady_clock::now();
  oracle::NormalizationRules rules = config.Rules();

  std::vector<std::future<WorkerOutput>> jobs;
  for (size_t w = 0; w < config.workers; ++w) {
    jobs.push_back(std::async(config.workers == 1 ? std::launch::deferred : std::launch::async,
                              RunWorker, std::cref(config), w, std::cref(rules)));
  }
  std::vector<WorkerOutput> outs;
  for (auto& j : jobs) outs.push_back(j.get());

  // Merge in worker order so the result does not depend on thread timing.
  CampaignResult result;
  oracle::ReportStore store;
  CoverageMap coverage;
  for (size_t w = 0; w < outs.size(); ++w) {
    const CampaignStats& s = outs[w].stats;
    result.stats.contexts += s.contexts;
    result.stats.mutants_generated += s.mutants_generated;
    result.stats.mutants_interesting += s.mutants_interesting;
    result.stats.mutants_deployed += s.mutants_deployed;
    result.stats.rpc_calls_sent += s.rpc_calls_sent;
    result.stats.divergences += s.divergences;
    coverage.Merge(outs[w].corpus.accumulated);
    for (const oracle::DivergenceReport& r : outs[w].reports) {
      if (store.Record(r) == oracle::RecordResult::kNew) {
        result.reports.push_back(r);
        result.report_workers.push_back(w);
      }
    }
  }
  result.stats.deduped_reports = result.reports.size();
  result.stats.coverage_cardinality = coverage.size();
  result.stats.wall_clock =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (!config.out_dir.empty()) {
    fs::path dir(config.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(Errc::kIo, "cannot create " + dir.string());
    oracle::ReportStore file((dir / "reports.jsonl").string());
    for (const oracle::DivergenceReport& r : result.reports) file.Record(r);
    WriteFile(dir / "stats.json", result.stats.ToJson().dump(2) + "\n");
    Json manifest = Json::object();
    manifest["rngSeed"] = config.rng_seed;
    manifest["config"] = config.ToJson();
    manifest["reportWorkers"] = result.report_workers;
    WriteFile(dir / "manifest.json", manifest.dump(2) + "\n");
    SaveCorpus((dir / "corpus").string(), outs[0].corpus);
    for (size_t w = 1; w < outs.size(); ++w)
      SaveCorpus((dir / "corpus" / ("worker-" + std::to_string(w))).string(), outs[w].corpus);
  }
  return result;
}

std::vector<ReplayVerdict> Replay(const std::string& report_path, const CampaignConfig& config) {
  config.Validate(true);
  fs::path manifest_path = fs::path(report_path).parent_path() / "manifest.json";
  Json manifest = ReadJsonFile(manifest_path);
  uint64_t recorded_seed = Field(manifest, "rngSeed", uint64_t{0});
  if (recorded_seed != config.rng_seed) {
    throw Error(Errc::kSeedMismatch, "reports were produced with rngSeed " +
                                         std::to_string(recorded_seed) + ", config has " +
                                         std::to_string(config.rng_seed));
  }
  // Phase 1 follows the recorded campaign; clients and rules come from the
  // caller so that faults can be toggled.
  CampaignConfig phase1 = CampaignConfig::FromJson(manifest.at("config"));
  phase1.clients = config.clients;
  oracle::NormalizationRules rules = config.Rules();
  std::vector<size_t> workers = Field(manifest, "reportWorkers", std::vector<size_t>{});

  std::vector<oracle::StoredReport> reports = oracle::LoadReports(report_path);
  std::vector<ReplayVerdict> verdicts(reports.size());
  std::map<size_t, std::vector<size_t>> by_worker;
  for (size_t i = 0; i < reports.size(); ++i) {
    verdicts[i].signature = reports[i].signature;
    verdicts[i].method = reports[i].method;
    verdicts[i].detail = "context block never reached";
    by_worker[i < workers.size() ? workers[i] : 0].push_back(i);
  }

  for (auto& [worker, pending] : by_worker) {
    ContextBuilder builder(phase1, WorkerSeed(phase1, worker));
    builder.SelectCorpus();
    const Network& net = builder.network();
    for (size_t round = 0; round < phase1.context_rounds && !pending.empty(); ++round) {
      builder.Round(round);
      std::vector<size_t> later;
      for (size_t i : pending) {
        const oracle::StoredReport& r = reports[i];
        if (r.context_block != net.head_number()) {
          later.push_back(i);
          continue;
        }
        ReplayVerdict& v = verdicts[i];
        if (r.context_hash != net.head().hash) {
          v.detail = "context hash differs";
          continue;
        }
        std::optional<oracle::Divergence> d = oracle::Compare(r.call, DispatchAll(net, r.call), rules);
        if (!d) {
          v.detail = "responses agree";
        } else if (oracle::Signature(*d) != r.signature) {
          v.detail = "different signature " + oracle::Signature(*d).Hex();
        } else {
          v.verdict = Verdict::kReproduced;
          v.detail.clear();
        }
      }
      pending = std::move(later);
    }
  }
  return verdicts;
}

}  // namespace ctxfuzz
