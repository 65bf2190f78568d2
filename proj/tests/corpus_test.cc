#include "ctxfuzz/corpus.h"

#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "ctxfuzz/error.h"
#include "ctxfuzz/opcodes.h"
#include "testnet.h"

namespace ctxfuzz {
namespace {

using ::ctxfuzz::testing::FundedAddress;
using ::ctxfuzz::testing::TestConfig;
using rpc::Json;

std::string TempPath(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("corpus_test_" + name)).string();
}

SeedItem Seed(const OpcodeSeq& code, uint64_t nonce = 0) {
  SeedItem s;
  s.tx.from = FundedAddress(0);
  s.tx.to = Address::FromHex("0x00000000000000000000000000000000000000bb");
  s.tx.gas_limit = 100'000;
  s.tx.max_fee_per_gas = Word(1'000'000'000);
  s.tx.nonce = nonce;
  s.callee_code = code;
  return s;
}

BlockContext Block() {
  BlockContext b;
  b.number = 1;
  b.base_fee = Word(1'000'000'000);
  b.gas_limit = 30'000'000;
  return b;
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

TEST(SeedStream, PopsInOrderThenExhausts) {
  SeedStream s({Seed(OpcodeSeq(), 0), Seed(OpcodeSeq(), 1)});
  EXPECT_EQ(s.Pop().tx.nonce, 0u);
  EXPECT_EQ(s.Pop().tx.nonce, 1u);
  EXPECT_TRUE(s.empty());
  EXPECT_EQ(CodeOf([&] { s.Pop(); }), Errc::kStreamExhausted);
}

TEST(SeedFile, RoundTrip) {
  SeedItem a = Seed(Assembler().Push(1).Op(op::STOP).Build(), 3);
  a.tx.value = Word::FromHex("0xde0b6b3a7640000");
  a.tx.data = {0xca, 0xfe};
  SeedItem b = Seed(OpcodeSeq(), 4);
  b.tx.to.reset();
  std::string path = TempPath("seeds.jsonl");
  SaveSeedFile(path, SeedStream({a, b}));
  SeedStream back = LoadSeedFile(path);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back.items()[0], a);
  EXPECT_EQ(back.items()[1], b);
}

TEST(SeedFile, ParsesDocumentedLine) {
  std::string path = TempPath("doc.jsonl");
  std::ofstream(path) << R"({"from":"0x1000000000000000000000000000000000000001",)"
                         R"("to":"0x00000000000000000000000000000000000000bb","value":"0x0",)"
                         R"("data":"0x","gasLimit":100000,"maxFeePerGas":"0x3b9aca00",)"
                         R"("nonce":0,"calleeCode":"0x600100"})"
                      << "\n\n";
  SeedStream s = LoadSeedFile(path);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s.items()[0].tx.gas_limit, 100'000u);
  EXPECT_EQ(s.items()[0].callee_code.Hex(), "0x600100");
}

TEST(SeedFile, RejectsUnknownKeys) {
  std::string path = TempPath("unknown.jsonl");
  Json j = SeedToJson(Seed(OpcodeSeq()));
  j["gasPrice"] = "0x1";
  std::ofstream(path) << j.dump() << "\n";
  EXPECT_EQ(CodeOf([&] { LoadSeedFile(path); }), Errc::kSeedFormat);
}

TEST(SeedFile, RejectsMissingAndMalformedFields) {
  Json j = SeedToJson(Seed(OpcodeSeq()));
  j.erase("nonce");
  EXPECT_EQ(CodeOf([&] { SeedFromJson(j); }), Errc::kSeedFormat);

  Json k = SeedToJson(Seed(OpcodeSeq()));
  k["gasLimit"] = "0x10";  // must be decimal
  EXPECT_EQ(CodeOf([&] { SeedFromJson(k); }), Errc::kSeedFormat);

  std::string path = TempPath("broken.jsonl");
  std::ofstream(path) << "{not json\n";
  try {
    LoadSeedFile(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kSeedFormat);
    EXPECT_NE(std::string(e.what()).find(":1:"), std::string::npos);
  }
}

TEST(Synthesize, ZeroCountIsEmpty) {
  Network net(TestConfig());
  EXPECT_TRUE(SynthesizeSeedStream(1, 0, net).empty());
  EXPECT_EQ(net.head_number(), 0u);
}

TEST(Synthesize, Deterministic) {
  auto hashes = [](uint64_t seed) {
    Network net(TestConfig());
    std::vector<Hash32> out;
    SeedStream stream = SynthesizeSeedStream(seed, 30, net);
    for (const SeedItem& s : stream.items()) out.push_back(s.tx.Hash());
    return out;
  };
  EXPECT_EQ(hashes(9), hashes(9));
  EXPECT_NE(hashes(9), hashes(10));
}

TEST(Synthesize, JumpsTargetRealJumpdests) {
  Rng rng(3);
  for (int i = 0; i < 300; ++i) {
    OpcodeSeq code = SynthesizeContract(rng, {});
    std::vector<bool> dests = JumpDestinations(code);
    std::vector<Instruction> ins = code.Decode();
    for (size_t k = 0; k < ins.size(); ++k) {
      if (ins[k].opcode != op::JUMP && ins[k].opcode != op::JUMPI) continue;
      ASSERT_GT(k, 0u);
      ASSERT_EQ(ins[k - 1].opcode, op::PUSH2) << code.Hex();
      uint32_t target = ins[k - 1].immediate[0] << 8 | ins[k - 1].immediate[1];
      ASSERT_LT(target, dests.size());
      EXPECT_TRUE(dests[target]) << code.Hex();
      EXPECT_GT(target, ins[k].pc);  // forward only
    }
  }
}

TEST(Synthesize, MostTransactionsHaltCleanly) {
  Network net(TestConfig());
  SeedStream s = SynthesizeSeedStream(21, 1000, net);
  size_t clean = 0;
  for (const SeedItem& seed : s.items()) {
    auto loc = net.FindTransaction(seed.tx.Hash());
    ASSERT_TRUE(loc.has_value());
    HaltKind h = net.blocks()[loc->block].receipts[0].halt;
    if (h == HaltKind::kStop || h == HaltKind::kReturn || h == HaltKind::kRevert) ++clean;
  }
  EXPECT_GE(clean, 900u);
}

TEST(SelectInitialCorpus, IdenticalTransactionIsGated) {
  OpcodeSeq code = Assembler().Push(1).Push(2).Op(op::ADD).Op(op::STOP).Build();
  SeedStream stream({Seed(code), Seed(code)});
  WorldState world;
  WorldReplay replay(world, Block());
  SelectionStats stats;
  CorpusState st = SelectInitialCorpus(stream, CorpusConfig(), replay, &stats);
  EXPECT_EQ(st.selected.size(), 1u);
  EXPECT_EQ(stats.skipped_by_opcode_gate, 1u);
  EXPECT_EQ(stats.executed, 1u);
  EXPECT_EQ(st.seen_opcodes, (std::set<uint8_t>{op::PUSH1, op::ADD, op::STOP}));
  ASSERT_TRUE(st.selected[0].reformed.has_value());
  EXPECT_EQ(st.selected[0].reformed->ops, code);
}

TEST(SelectInitialCorpus, EmptyStreamGivesEmptyState) {
  SeedStream stream;
  WorldState world;
  CorpusState st = SelectInitialCorpus(stream, CorpusConfig(), WorldReplay(world, Block()));
  EXPECT_TRUE(st.selected.empty());
  EXPECT_TRUE(st.accumulated.empty());
}

TEST(SelectInitialCorpus, RespectsCaps) {
  Network net(TestConfig());
  SeedStream stream = SynthesizeSeedStream(5, 60, net);
  CorpusConfig cfg;
  cfg.max_selected = 3;
  cfg.coverage_threshold = 1'000'000;
  CorpusState st = SelectInitialCorpus(stream, cfg, ChainReplay(net));
  EXPECT_EQ(st.selected.size(), 3u);

  SeedStream again = SynthesizeSeedStream(5, 60, net);
  CorpusConfig low;
  low.coverage_threshold = 10;
  CorpusState first = SelectInitialCorpus(again, low, ChainReplay(net));
  EXPECT_GE(first.accumulated.size(), 10u);
  // The loop stopped as soon as the threshold was crossed.
  CoverageMap before_last;
  for (size_t i = 0; i + 1 < first.selected.size(); ++i) before_last.Merge(first.selected[i].coverage);
  EXPECT_LT(before_last.size(), 10u);

  CorpusConfig bad;
  bad.max_selected = 0;
  SeedStream none;
  EXPECT_EQ(CodeOf([&] { SelectInitialCorpus(none, bad, ChainReplay(net)); }), Errc::kConfigInvalid);
}

// Brute-force checks over a 200-transaction synthetic stream.
TEST(SelectInitialCorpus, SyntheticStreamInvariants) {
  Network net(TestConfig());
  SeedStream stream = SynthesizeSeedStream(42, 200, net);
  CorpusConfig cfg;
  cfg.coverage_threshold = 1'000'000;
  ChainReplay replay(net);
  SelectionStats stats;
  CorpusState st = SelectInitialCorpus(stream, cfg, replay, &stats);
  ASSERT_GT(st.selected.size(), 1u);
  EXPECT_EQ(stats.popped, 200u);
  EXPECT_EQ(stats.recorded, st.selected.size());

  CoverageMap brute;
  std::set<uint8_t> executed;
  size_t previous = 0;
  for (const CorpusEntry& e : st.selected) {
    EXPECT_FALSE(e.coverage.empty());
    EXPECT_GT(brute.Merge(e.coverage), 0u);
    EXPECT_GT(brute.size(), previous);
    previous = brute.size();

    ExecResult r = replay.Replay({e.tx, e.callee_code});
    EXPECT_EQ(r.coverage, e.coverage);
    for (const TraceStep& s : r.trace.steps) executed.insert(s.opcode);
  }
  EXPECT_EQ(brute, st.accumulated);
  EXPECT_EQ(executed, st.seen_opcodes);
}

TEST(Corpus, SaveLoadRoundTrip) {
  Network net(TestConfig());
  SeedStream stream = SynthesizeSeedStream(8, 40, net);
  CorpusState st = SelectInitialCorpus(stream, CorpusConfig(), ChainReplay(net));
  ASSERT_FALSE(st.selected.empty());
  std::string dir = TempPath("dir");
  std::filesystem::remove_all(dir);
  SaveCorpus(dir, st);
  EXPECT_EQ(LoadCorpus(dir), st);
}

TEST(Corpus, TamperedHashIsRejected) {
  Network net(TestConfig());
  SeedStream stream = SynthesizeSeedStream(8, 5, net);
  CorpusState st = SelectInitialCorpus(stream, CorpusConfig(), ChainReplay(net));
  ASSERT_FALSE(st.selected.empty());
  Json j = CorpusEntryToJson(st.selected[0]);
  j["tx"]["nonce"] = 999;
  EXPECT_EQ(CodeOf([&] { CorpusEntryFromJson(j); }), Errc::kSeedFormat);
}

}  // namespace
}  // namespace ctxfuzz
