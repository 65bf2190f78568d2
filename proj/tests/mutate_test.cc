#include "ctxfuzz/mutate.h"

#include <gtest/gtest.h>

#include "ctxfuzz/error.h"
#include "ctxfuzz/opcodes.h"
#include "testnet.h"

namespace ctxfuzz {
namespace {

using ::ctxfuzz::testing::FundedAddress;
using ::ctxfuzz::testing::TestConfig;

LinearSequence Seq(const Assembler& a) { return {a.Build(), std::nullopt}; }

std::vector<uint8_t> Opcodes(const OpcodeSeq& code) {
  std::vector<uint8_t> out;
  for (const Instruction& i : code.Decode()) out.push_back(i.opcode);
  return out;
}

bool HasJump(const OpcodeSeq& code) {
  for (uint8_t o : Opcodes(code)) {
    if (o == op::JUMP || o == op::JUMPI) return true;
  }
  return false;
}

Errc CodeOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::kIo;
}

TEST(AnalyzeUsedLocations, ConstantStorageKey) {
  StateLocations l = AnalyzeUsedLocations(Seq(Assembler().Push(7).Push(1).Op(op::SSTORE)));
  EXPECT_EQ(l.storage_keys, (std::set<Word>{Word(1)}));
  EXPECT_TRUE(l.transient_keys.empty());
}

TEST(AnalyzeUsedLocations, UnknownValueKnownKey) {
  StateLocations l = AnalyzeUsedLocations(Seq(Assembler().Op(op::DUP1).Push(1).Op(op::SSTORE)));
  EXPECT_EQ(l.storage_keys, (std::set<Word>{Word(1)}));
}

TEST(AnalyzeUsedLocations, MemoryOffsetAndHighWater) {
  StateLocations l = AnalyzeUsedLocations(Seq(Assembler().Push(9).Push(64).Op(op::MSTORE)));
  EXPECT_EQ(l.mem_offsets, (std::set<uint64_t>{64}));
  EXPECT_EQ(l.mem_high_water, 96u);
}

TEST(AnalyzeUsedLocations, UnknownKeysAreIgnored) {
  // CALLVALUE is not a constant, so neither store is recorded.
  StateLocations l = AnalyzeUsedLocations(
      Seq(Assembler().Push(1).Op(op::CALLVALUE).Op(op::TSTORE).Push(1).Op(op::CALLVALUE).Op(op::MSTORE)));
  EXPECT_EQ(l, StateLocations());
}

TEST(AnalyzeUsedLocations, DupAndSwapCarryConstants) {
  // PUSH 5, PUSH 3, SWAP1 -> [3, 5] with 5 on top; DUP1 copies it.
  StateLocations l = AnalyzeUsedLocations(
      Seq(Assembler().Push(5).Push(3).Op(op::SWAP1).Op(op::DUP1).Op(op::TSTORE).Op(op::POP)));
  EXPECT_EQ(l.transient_keys, (std::set<Word>{Word(5)}));
}

TEST(AnalyzeUsedLocations, OffsetsStayBelowHighWater) {
  Rng rng(4);
  MutationConfig cfg;
  cfg.opcode_corpus = {op::PUSH1, op::PUSH2, op::MSTORE, op::SSTORE, op::DUP1, op::SWAP1, op::ADD};
  LinearSequence seq;
  for (int i = 0; i < 2000; ++i) {
    seq = MutateOpcodeLevel(seq, StateLocations(), cfg, rng, Edit::kInsert);
    StateLocations l = AnalyzeUsedLocations(seq);
    for (uint64_t off : l.mem_offsets) EXPECT_LT(off, l.mem_high_water + 32);
  }
}

class MutationTest : public ::testing::Test {
 protected:
  MutationTest() {
    cfg_.block_corpus = {
        BasicBlock::FromOps(Assembler().Push(1).Push(2).Op(op::ADD).Build()),
        BasicBlock::FromOps(Assembler().Op(op::CALLVALUE).Push(0).Op(op::SSTORE).Build()),
        BasicBlock::FromOps(Assembler().Op(op::BASEFEE).Op(op::POP).Build()),
    };
  }
  MutationConfig cfg_;
  Rng rng_{17};
};

TEST_F(MutationTest, DeletingTheOnlyBlockEmptiesTheSequence) {
  LinearSequence one = Seq(Assembler().Push(1).Op(op::POP));
  EXPECT_TRUE(MutateBlockLevel(one, cfg_, rng_, Edit::kDelete).ops.empty());
}

TEST_F(MutationTest, InsertIntoEmptySequence) {
  cfg_.block_corpus.resize(1);
  LinearSequence out = MutateBlockLevel(LinearSequence(), cfg_, rng_, Edit::kInsert);
  EXPECT_EQ(out.ops, cfg_.block_corpus[0].ops);
}

TEST_F(MutationTest, DeleteFromEmptyFallsBackToInsert) {
  LinearSequence out = MutateBlockLevel(LinearSequence(), cfg_, rng_, Edit::kDelete);
  EXPECT_FALSE(out.ops.empty());
  EXPECT_FALSE(MutateOpcodeLevel(LinearSequence(), StateLocations(), cfg_, rng_, Edit::kDelete).ops.empty());
}

TEST_F(MutationTest, InsertionLandsAtABlockBoundary) {
  LinearSequence seq = Seq(Assembler().Push(1).Op(op::JUMPDEST).Push(2));
  cfg_.block_corpus.resize(1);
  for (int i = 0; i < 20; ++i) {
    std::vector<BasicBlock> blocks = SegmentBlocks(MutateBlockLevel(seq, cfg_, rng_, Edit::kInsert));
    ASSERT_EQ(blocks.size(), 3u);
    EXPECT_EQ(std::count(blocks.begin(), blocks.end(), cfg_.block_corpus[0]), 1);
  }
}

TEST_F(MutationTest, MutationsNeverIntroduceJumps) {
  LinearSequence seq = Seq(Assembler().Push(1).Push(2).Op(op::ADD).Op(op::JUMPDEST).Op(op::STOP));
  for (int i = 0; i < 1000; ++i) {
    seq = rng_.Chance(0.5) ? MutateBlockLevel(seq, cfg_, rng_)
                           : MutateOpcodeLevel(seq, AnalyzeUsedLocations(seq), cfg_, rng_);
    ASSERT_FALSE(HasJump(seq.ops)) << seq.ops.Hex();
  }
}

TEST_F(MutationTest, SloadGetsAKnownKey) {
  StateLocations locs;
  locs.storage_keys = {Word(5)};
  EXPECT_EQ(InsertionSnippet(op::SLOAD, locs, cfg_, rng_), Assembler().Push(5).Op(op::SLOAD).Build());
}

TEST_F(MutationTest, KeccakGetsSizeAndOffset) {
  StateLocations locs;
  locs.mem_offsets = {64};
  EXPECT_EQ(InsertionSnippet(op::KECCAK256, locs, cfg_, rng_),
            Assembler().Push(32).Push(64).Op(op::KECCAK256).Build());
}

TEST_F(MutationTest, MloadAndTloadGetKnownLocations) {
  StateLocations locs;
  locs.mem_offsets = {96};
  locs.transient_keys = {Word(3)};
  EXPECT_EQ(InsertionSnippet(op::MLOAD, locs, cfg_, rng_), Assembler().Push(96).Op(op::MLOAD).Build());
  EXPECT_EQ(InsertionSnippet(op::TLOAD, locs, cfg_, rng_), Assembler().Push(3).Op(op::TLOAD).Build());
}

TEST_F(MutationTest, PlainInsertionWithoutStateAwareness) {
  StateLocations locs;
  locs.storage_keys = {Word(5)};
  cfg_.state_aware = false;
  EXPECT_EQ(InsertionSnippet(op::SLOAD, locs, cfg_, rng_), Assembler().Op(op::SLOAD).Build());
}

TEST_F(MutationTest, PushGetsRandomOperandOfItsWidth) {
  for (int k = 1; k <= 32; ++k) {
    uint8_t push = static_cast<uint8_t>(op::PUSH0 + k);
    OpcodeSeq s = InsertionSnippet(push, StateLocations(), cfg_, rng_);
    ASSERT_EQ(s.size(), static_cast<size_t>(k + 1));
    EXPECT_EQ(s.bytes[0], push);
  }
  EXPECT_EQ(InsertionSnippet(op::PUSH0, StateLocations(), cfg_, rng_).size(), 1u);
}

// An SLOAD inserted anywhere in a sequence that stores 7 at key 1: a known
// key reads the stored value more often than whatever the stack holds.
TEST(StateAwareness, SloadReadsLiveSlotMoreOften) {
  LinearSequence seq = Seq(Assembler().Push(7).Push(1).Op(op::SSTORE).Push(3).Push(9).Op(op::ADDRESS));
  StateLocations locs = AnalyzeUsedLocations(seq);
  auto nonzero_fraction = [&](bool aware) {
    MutationConfig cfg;
    cfg.opcode_corpus = {op::SLOAD};
    cfg.state_aware = aware;
    Rng rng(99);
    ExecContext ctx;
    ctx.block.base_fee = Word(1);
    ctx.block.gas_limit = 30'000'000;
    ctx.gas_limit = 100'000;
    size_t nonzero = 0;
    const int kRuns = 10'000;
    for (int i = 0; i < kRuns; ++i) {
      LinearSequence m = MutateOpcodeLevel(seq, locs, cfg, rng, Edit::kInsert);
      m.ops.bytes.push_back(op::STOP);
      ExecResult r = Execute(m.ops, ctx, WorldState());
      for (size_t k = 0; k + 1 < r.trace.steps.size(); ++k) {
        if (r.trace.steps[k].opcode == op::SLOAD && !r.trace.steps[k + 1].stack_top.empty() &&
            !r.trace.steps[k + 1].stack_top[0].IsZero()) {
          ++nonzero;
        }
      }
    }
    return static_cast<double>(nonzero) / kRuns;
  };
  double with = nonzero_fraction(true);
  double without = nonzero_fraction(false);
  EXPECT_LT(without, with);
  EXPECT_GT(with, 0.3);
}

class SimulationTest : public ::testing::Test {
 protected:
  SimulationTest() : net_(TestConfig()) {}

  Transaction Call(const Address& to) {
    Transaction tx;
    tx.from = FundedAddress(1);
    tx.to = to;
    tx.gas_limit = 200'000;
    tx.max_fee_per_gas = net_.NextBlockContext().base_fee;
    tx.nonce = net_.world().Nonce(tx.from);
    return tx;
  }

  Network net_;
};

TEST_F(SimulationTest, MissingCallee) {
  Transaction tx = Call(FundedAddress(9));
  EXPECT_EQ(CodeOf([&] { SimulateOffChain(tx, net_.world(), net_.NextBlockContext()); }),
            Errc::kMissingCallee);
}

TEST_F(SimulationTest, DeterministicAndIsolated) {
  Address c = net_.Deploy(Assembler().Push(1).Push(0).Op(op::SSTORE).Op(op::STOP).Build(), FundedAddress(0));
  Hash32 head = net_.head().hash;
  Transaction tx = Call(c);
  ExecResult a = SimulateOffChain(tx, net_.world(), net_.NextBlockContext());
  ExecResult b = SimulateOffChain(tx, net_.world(), net_.NextBlockContext());
  EXPECT_EQ(a.coverage, b.coverage);
  EXPECT_FALSE(a.coverage.empty());
  EXPECT_EQ(net_.head().hash, head);
  EXPECT_EQ(net_.world().Storage(c, Word(0)), Word());
}

TEST_F(SimulationTest, MatchesOnChainExecution) {
  Rng rng(8);
  MutationConfig cfg;
  for (int i = 0; i < 100; ++i) {
    LinearSequence seq;
    for (int k = 0; k < 12; ++k) seq = MutateOpcodeLevel(seq, AnalyzeUsedLocations(seq), cfg, rng, Edit::kInsert);
    Address c = net_.Deploy(seq.ops, FundedAddress(0));
    Transaction tx = Call(c);
    BlockContext next = net_.NextBlockContext();
    ExecResult sim = SimulateOffChain(tx, net_.world(), next);
    TxOutcome real = ProcessTransaction(net_.world(), tx, next);
    EXPECT_EQ(sim.coverage, real.exec.coverage);
    net_.Submit(tx);
  }
}

class LoopTest : public ::testing::Test {
 protected:
  LoopTest() : net_(TestConfig()) {
    SeedStream s = SynthesizeSeedStream(3, 40, net_);
    corpus_ = SelectInitialCorpus(s, CorpusConfig(), ChainReplay(net_));
    cfg_.block_corpus = BuildBlockCorpus(corpus_);
    cfg_.rng_seed = 12;
  }

  Network net_;
  CorpusState corpus_;
  MutationConfig cfg_;
};

TEST_F(LoopTest, ZeroBudget) {
  uint64_t head = net_.head_number();
  ContextArtifacts art = FuzzContextLoop(corpus_, 0, net_, cfg_);
  EXPECT_EQ(art.stats.generated, 0u);
  EXPECT_EQ(art.stats.deployed, 0u);
  EXPECT_EQ(art.final_coverage, corpus_.accumulated);
  EXPECT_EQ(net_.head_number(), head);
}

TEST_F(LoopTest, GrowsCoverageAndOnlyDeploysInterestingMutants) {
  CoverageMap before = corpus_.accumulated;
  size_t entries = corpus_.selected.size();
  uint64_t head = net_.head_number();
  ContextArtifacts art = FuzzContextLoop(corpus_, 400, net_, cfg_);

  EXPECT_EQ(art.stats.generated, 400u);
  EXPECT_LE(art.stats.deployed, art.stats.interesting);
  EXPECT_LE(art.stats.interesting, art.stats.generated);
  EXPECT_GT(art.stats.deployed, 0u);
  EXPECT_EQ(art.deployed_txs.size(), 2 * art.stats.deployed);
  // Discarded mutants leave no blocks behind.
  EXPECT_EQ(net_.head_number(), head + 2 * art.stats.deployed);
  EXPECT_EQ(MergeCoverage(before, art.final_coverage), art.final_coverage);

  // Each appended entry grew the accumulated coverage when it was added.
  CoverageMap acc = before;
  for (size_t i = entries; i < corpus_.selected.size(); ++i) {
    EXPECT_GT(acc.Merge(corpus_.selected[i].coverage), 0u);
    EXPECT_FALSE(HasJump(corpus_.selected[i].callee_code));
  }
  EXPECT_EQ(acc, art.final_coverage);
  for (const Transaction& tx : art.deployed_txs) EXPECT_TRUE(net_.FindTransaction(tx.Hash()).has_value());
}

TEST_F(LoopTest, Deterministic) {
  auto run = [](uint64_t seed) {
    Network net(TestConfig());
    SeedStream s = SynthesizeSeedStream(3, 40, net);
    CorpusState corpus = SelectInitialCorpus(s, CorpusConfig(), ChainReplay(net));
    MutationConfig cfg;
    cfg.block_corpus = BuildBlockCorpus(corpus);
    cfg.rng_seed = seed;
    std::vector<Hash32> out;
    for (const Transaction& tx : FuzzContextLoop(corpus, 200, net, cfg).deployed_txs) out.push_back(tx.Hash());
    return out;
  };
  EXPECT_EQ(run(5), run(5));
  EXPECT_NE(run(5), run(6));
}

TEST_F(LoopTest, EmptyCorpusStillGrowsFromOpcodes) {
  CorpusState empty;
  MutationConfig cfg;
  cfg.rng_seed = 1;
  ContextArtifacts art = FuzzContextLoop(empty, 100, net_, cfg);
  EXPECT_GT(art.final_coverage.size(), 0u);
  EXPECT_EQ(empty.accumulated, art.final_coverage);
}

TEST_F(LoopTest, NothingToMutateFrom) {
  CorpusState empty;
  MutationConfig cfg;
  cfg.opcode_corpus.clear();
  EXPECT_EQ(CodeOf([&] { FuzzContextLoop(empty, 10, net_, cfg); }), Errc::kEmptyInitialState);
}

TEST_F(LoopTest, InvalidConfig) {
  MutationConfig zero;
  zero.weights = {0, 0, 0, 0};
  EXPECT_EQ(CodeOf([&] { FuzzContextLoop(corpus_, 1, net_, zero); }), Errc::kConfigInvalid);
  MutationConfig jumpy;
  jumpy.opcode_corpus.push_back(op::JUMP);
  EXPECT_EQ(CodeOf([&] { FuzzContextLoop(corpus_, 1, net_, jumpy); }), Errc::kConfigInvalid);
}

}  // namespace
}  // namespace ctxfuzz
