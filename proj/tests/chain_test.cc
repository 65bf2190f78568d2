#include "ctxfuzz/chain.h"

#include <gtest/gtest.h>

#include "ctxfuzz/corpus.h"
#include "ctxfuzz/error.h"
#include "ctxfuzz/opcodes.h"
#include "testnet.h"

namespace ctxfuzz {
namespace {

using ::ctxfuzz::testing::FundedAddress;
using ::ctxfuzz::testing::TestConfig;

Errc CodeOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::kIo;
}

Transaction Transfer(const Network& net, int from, const Address& to, uint64_t value) {
  Transaction tx;
  tx.from = FundedAddress(from);
  tx.to = to;
  tx.value = Word(value);
  tx.gas_limit = 21'000;
  tx.max_fee_per_gas = net.NextBlockContext().base_fee;
  tx.nonce = net.world().Nonce(tx.from);
  return tx;
}

TEST(ClientSpec, ParsesFaultLists) {
  ClientHandle c = ParseClientSpec("v1:F1+F4_TraceWrongGasCost");
  EXPECT_EQ(c.id, "v1");
  ASSERT_EQ(c.faults.size(), 2u);
  EXPECT_TRUE(c.HasFault(FaultId::kUnlimitedEthCallGas));
  EXPECT_TRUE(c.HasFault(FaultId::kTraceWrongGasCost));
  EXPECT_EQ(ClientSpecString(c), "v1:F1+F4");
  EXPECT_EQ(ParseClientSpec("ref").faults.size(), 0u);
  EXPECT_EQ(CodeOf([] { ParseFault("F9"); }), Errc::kConfigInvalid);
}

TEST(InitNetwork, Genesis) {
  Network net(TestConfig(2, {"ref", "v:F1"}));
  EXPECT_EQ(net.head_number(), 0u);
  EXPECT_EQ(net.head().context.gas_limit, 30'000'000u);
  EXPECT_EQ(net.head().context.base_fee, Word(1'000'000'000));
  EXPECT_TRUE(net.head().transactions.empty());
  EXPECT_EQ(net.world().Balance(FundedAddress(1)), Word::FromHex("0xd3c21bcecceda1000000"));
}

TEST(InitNetwork, SingleClientIsAccepted) { EXPECT_NO_THROW(Network(TestConfig(1, {"ref"}))); }

TEST(InitNetwork, SameConfigSameGenesis) {
  EXPECT_EQ(Network(TestConfig()).head().hash, Network(TestConfig()).head().hash);
  EXPECT_NE(Network(TestConfig(3)).head().hash, Network(TestConfig(4)).head().hash);
}

TEST(InitNetwork, RejectsBadClientLists) {
  EXPECT_EQ(CodeOf([] { Network(TestConfig(1, {})); }), Errc::kZeroClients);
  EXPECT_EQ(CodeOf([] { Network(TestConfig(1, {"a", "a:F2"})); }), Errc::kDuplicateClientId);
  EXPECT_EQ(CodeOf([] { Network(TestConfig(1, {"a:F1", "b"})); }), Errc::kReferenceHasFaults);
}

TEST(Submit, PlainTransfer) {
  Network net(TestConfig());
  Address to = Address::FromHex("0x00000000000000000000000000000000000000b0");
  Word before = net.world().Balance(FundedAddress(0));
  Receipt r = net.Submit(Transfer(net, 0, to, 5));
  EXPECT_EQ(r.status, TxStatus::kSuccess);
  EXPECT_EQ(r.gas_used, 21'000u);
  EXPECT_EQ(net.world().Balance(to), Word(5));
  EXPECT_EQ(net.world().Balance(FundedAddress(0)), before - Word(5) - Word(21'000) * Word(1'000'000'000));
  EXPECT_EQ(net.head_number(), 1u);
  EXPECT_EQ(net.head().transactions.size(), 1u);
}

TEST(Submit, DeploymentInstallsCodeVerbatim) {
  Network net(TestConfig());
  OpcodeSeq code = Assembler().Push(1).Push(0).Op(op::SSTORE).Op(op::STOP).Build();
  Transaction tx;
  tx.from = FundedAddress(0);
  tx.data = code.bytes;
  tx.gas_limit = 21'000;
  tx.max_fee_per_gas = Word(1'000'000'000);
  Receipt r = net.Submit(tx);
  ASSERT_TRUE(r.contract_address.has_value());
  EXPECT_EQ(net.world().Code(*r.contract_address), code);
  EXPECT_EQ(net.contracts(), std::vector<Address>{*r.contract_address});
}

TEST(Submit, ValidationErrors) {
  Network net(TestConfig());
  Address to = FundedAddress(1);
  Transaction low = Transfer(net, 0, to, 1);
  low.max_fee_per_gas = Word(999'999'999);
  EXPECT_EQ(CodeOf([&] { net.Submit(low); }), Errc::kFeeBelowBase);

  Transaction nonce = Transfer(net, 0, to, 1);
  nonce.nonce = 7;
  EXPECT_EQ(CodeOf([&] { net.Submit(nonce); }), Errc::kNonceMismatch);

  Transaction rich = Transfer(net, 0, to, 0);
  rich.value = net.world().Balance(rich.from);
  EXPECT_EQ(CodeOf([&] { net.Submit(rich); }), Errc::kInsufficientFunds);

  Transaction tiny = Transfer(net, 0, to, 1);
  tiny.gas_limit = 20'999;
  EXPECT_EQ(CodeOf([&] { net.Submit(tiny); }), Errc::kIntrinsicGasTooLow);
  EXPECT_EQ(net.head_number(), 0u);
}

TEST(Submit, FailedExecutionStillProducesABlock) {
  Network net(TestConfig());
  Address c = net.Deploy(Assembler().Op(op::ADD).Build(), FundedAddress(0));
  Transaction tx = Transfer(net, 1, c, 0);
  tx.gas_limit = 50'000;
  Receipt r = net.Submit(tx);
  EXPECT_EQ(r.status, TxStatus::kFailed);
  EXPECT_EQ(r.halt, HaltKind::kStackUnderflow);
  EXPECT_EQ(r.gas_used, 50'000u);
  EXPECT_EQ(net.head_number(), 2u);
  EXPECT_EQ(net.world().Nonce(FundedAddress(1)), 1u);
}

TEST(Submit, ExecutionIsCappedByTheBlockGasLimit) {
  Network net(TestConfig());
  // Reads GAS at the first step.
  Address c = net.Deploy(Assembler().Op(op::GAS).Push(0).Op(op::SSTORE).Build(), FundedAddress(0));
  Transaction tx = Transfer(net, 1, c, 0);
  tx.gas_limit = 40'000'000;
  net.Submit(tx);
  EXPECT_EQ(net.world().Storage(c, Word(0)), Word(30'000'000 - 21'000 - 3));
}

TEST(Deploy, AddressesFollowDeployerAndNonce) {
  Network net(TestConfig());
  Address a = net.Deploy(OpcodeSeq(), FundedAddress(0));
  Address b = net.Deploy(OpcodeSeq(), FundedAddress(0));
  EXPECT_NE(a, b);
  EXPECT_TRUE(net.world().Code(a).empty());
  // keccak256(deployer ++ nonce), computed with pycryptodome.
  EXPECT_EQ(a.Hex(), "0x0c8eef413f0a949198da1951da59dbb11701e5a7");
  EXPECT_EQ(b.Hex(), "0x086cbfcdc6ff754c540bf915cfc5c66939d1d962");
  EXPECT_EQ(ContractAddress(FundedAddress(0), 1), b);
}

TEST(Network, HistoricalStateAndLookup) {
  Network net(TestConfig());
  Address to = FundedAddress(3);
  Transaction t1 = Transfer(net, 0, to, 10);
  net.Submit(t1);
  net.Submit(Transfer(net, 0, to, 20));
  Word genesis = net.StateAt(0).Balance(to);
  EXPECT_EQ(net.StateAt(1).Balance(to), genesis + Word(10));
  EXPECT_EQ(net.StateAt(2).Balance(to), genesis + Word(30));
  auto loc = net.FindTransaction(t1.Hash());
  ASSERT_TRUE(loc.has_value());
  EXPECT_EQ(loc->block, 1u);
  EXPECT_EQ(*net.TransactionAt(*loc), t1);
  EXPECT_FALSE(net.FindTransaction(Hash32()).has_value());
}

TEST(Network, BlocksLinkAndNumbersIncrease) {
  Network net(TestConfig());
  for (int i = 0; i < 5; ++i) net.Submit(Transfer(net, i % 4, FundedAddress(3), 1));
  for (size_t i = 1; i < net.blocks().size(); ++i) {
    EXPECT_EQ(net.blocks()[i].context.number, i);
    EXPECT_EQ(net.blocks()[i].context.parent_hash, net.blocks()[i - 1].hash);
    EXPECT_GT(net.blocks()[i].context.timestamp, net.blocks()[i - 1].context.timestamp);
    EXPECT_LE(net.blocks()[i].gas_used, net.blocks()[i].context.gas_limit);
    EXPECT_EQ(net.blocks()[i].transactions.size(), net.blocks()[i].receipts.size());
  }
}

TEST(Network, BaseFeeAdjustmentIsOptional) {
  NetworkConfig cfg = TestConfig();
  cfg.adjust_base_fee = true;
  Network net(cfg);
  net.Submit(Transfer(net, 0, FundedAddress(1), 1));
  // A nearly empty block lowers the next base fee by up to 1/8.
  Word next = net.NextBlockContext().base_fee;
  EXPECT_LT(next, Word(1'000'000'000));
  EXPECT_GE(next, Word(875'000'000));

  Network flat(TestConfig());
  flat.Submit(Transfer(flat, 0, FundedAddress(1), 1));
  EXPECT_EQ(flat.NextBlockContext().base_fee, Word(1'000'000'000));
}

// Replaying every block from genesis reproduces the head world.
TEST(Network, BlockIntegrity) {
  Network net(TestConfig());
  SynthesizeSeedStream(12, 60, net);
  WorldState world;
  for (const auto& [a, bal] : net.config().accounts) world.Mutable(a).balance = bal;
  for (size_t i = 1; i < net.blocks().size(); ++i) {
    const Block& b = net.blocks()[i];
    TxOutcome out = ProcessTransaction(world, b.transactions[0], b.context);
    EXPECT_EQ(out.receipt, b.receipts[0]);
    for (const auto& [addr, acct] : out.changed) world.Put(addr, acct);
  }
  EXPECT_EQ(world.StateHash(), net.world().StateHash());
}

TEST(ProcessTransaction, IsPure) {
  Network net(TestConfig());
  Transaction tx = Transfer(net, 0, FundedAddress(2), 9);
  Hash32 before = net.world().StateHash();
  TxOutcome a = ProcessTransaction(net.world(), tx, net.NextBlockContext());
  TxOutcome b = ProcessTransaction(net.world(), tx, net.NextBlockContext());
  EXPECT_EQ(net.world().StateHash(), before);
  EXPECT_EQ(a.receipt, b.receipt);
  EXPECT_EQ(a.changed, b.changed);
}

TEST(CallContext, GasIsCappedAndFloored) {
  BlockContext block;
  block.gas_limit = 100'000;
  Transaction tx;
  tx.gas_limit = 500'000;
  EXPECT_EQ(CallContext(tx, block).gas_limit, 79'000u);
  tx.gas_limit = 30'000;
  EXPECT_EQ(CallContext(tx, block).gas_limit, 9'000u);
  tx.gas_limit = 1'000;
  EXPECT_EQ(CallContext(tx, block).gas_limit, 0u);
}

}  // namespace
}  // namespace ctxfuzz
