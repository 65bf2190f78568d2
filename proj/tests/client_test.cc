#include "ctxfuzz/client.h"

#include <gtest/gtest.h>

#include "ctxfuzz/corpus.h"
#include "ctxfuzz/opcodes.h"
#include "ctxfuzz/rpc/generate.h"
#include "ctxfuzz/rpc/hexfmt.h"
#include "ctxfuzz/rpc/wire.h"
#include "testnet.h"

namespace ctxfuzz {
namespace {

using ::ctxfuzz::testing::FundedAddress;
using ::ctxfuzz::testing::TestConfig;
using rpc::Json;
using rpc::RpcCall;
using rpc::RpcResponse;

const ClientHandle kRef{"ref", {}};

ClientHandle Variant(const char* faults) { return ParseClientSpec(std::string("v:") + faults); }

RpcCall Call(std::string method, Json params) {
  RpcCall c;
  c.id = 1;
  c.method = std::move(method);
  c.params = std::move(params);
  return c;
}

Json TxObject(const Address& from, const Address& to, uint64_t gas, std::optional<Word> fee = {}) {
  Json j = Json::object();
  j["from"] = from.Hex();
  j["to"] = to.Hex();
  j["gas"] = rpc::QuantityJson(gas);
  if (fee) j["maxFeePerGas"] = rpc::QuantityJson(*fee);
  return j;
}

class ClientTest : public ::testing::Test {
 protected:
  ClientTest() : net_(TestConfig()) {}

  Hash32 Invoke(const Address& c, uint64_t gas = 100'000) {
    Transaction tx;
    tx.from = FundedAddress(1);
    tx.to = c;
    tx.gas_limit = gas;
    tx.max_fee_per_gas = net_.NextBlockContext().base_fee;
    tx.nonce = net_.world().Nonce(tx.from);
    net_.Submit(tx);
    return tx.Hash();
  }

  Network net_;
};

TEST_F(ClientTest, BalanceOfFundedAccount) {
  RpcResponse r = Dispatch(kRef, net_, Call("eth_getBalance", {FundedAddress(2).Hex(), "latest"}));
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(*r.result, "0xd3c21bcecceda1000000");
}

TEST_F(ClientTest, BalanceAtEarlierBlock) {
  Address c = net_.Deploy(OpcodeSeq(), FundedAddress(0));
  (void)c;
  RpcResponse then = Dispatch(kRef, net_, Call("eth_getBalance", {FundedAddress(0).Hex(), "0x0"}));
  RpcResponse now = Dispatch(kRef, net_, Call("eth_getBalance", {FundedAddress(0).Hex(), "latest"}));
  EXPECT_NE(*then.result, *now.result);
  RpcResponse future = Dispatch(kRef, net_, Call("eth_getBalance", {FundedAddress(0).Hex(), "0x9"}));
  ASSERT_FALSE(future.ok());
  EXPECT_EQ(future.error->code, rpc::code::kServer);
}

TEST_F(ClientTest, EmptyCodeIsHex0xOrNullUnderF2) {
  RpcCall c = Call("eth_getCode", {"0x00000000000000000000000000000000000000ee", "latest"});
  EXPECT_EQ(*Dispatch(kRef, net_, c).result, "0x");
  EXPECT_TRUE(Dispatch(Variant("F2"), net_, c).result->is_null());

  Address code = net_.Deploy(Assembler().Op(op::STOP).Build(), FundedAddress(0));
  RpcCall d = Call("eth_getCode", {code.Hex(), "latest"});
  EXPECT_EQ(*Dispatch(kRef, net_, d).result, "0x00");
  EXPECT_EQ(*Dispatch(Variant("F2"), net_, d).result, "0x00");
}

TEST_F(ClientTest, IndexOffByOneUnderF6) {
  Address c = net_.Deploy(OpcodeSeq(), FundedAddress(0));
  Invoke(c);
  RpcCall call = Call("eth_getTransactionByBlockNumberAndIndex", {"0x2", "0x0"});
  RpcResponse ref = Dispatch(kRef, net_, call);
  ASSERT_TRUE(ref.ok());
  EXPECT_EQ((*ref.result)["to"], c.Hex());
  EXPECT_EQ((*ref.result)["transactionIndex"], "0x0");
  RpcResponse bad = Dispatch(Variant("F6"), net_, call);
  ASSERT_TRUE(bad.ok());
  EXPECT_TRUE(bad.result->is_null());
}

TEST_F(ClientTest, EthCallGasCapUnderF1) {
  Address c = net_.Deploy(Assembler().Push(1).Push(0).Op(op::MSTORE).Push(32).Push(0).Op(op::RETURN).Build(),
                          FundedAddress(0));
  RpcCall over = Call("eth_call", {TxObject(FundedAddress(1), c, 40'000'000), "latest"});
  RpcResponse ref = Dispatch(kRef, net_, over);
  ASSERT_FALSE(ref.ok());
  EXPECT_EQ(ref.error->code, rpc::code::kServer);
  RpcResponse f1 = Dispatch(Variant("F1"), net_, over);
  ASSERT_TRUE(f1.ok());
  EXPECT_EQ(*f1.result, "0x0000000000000000000000000000000000000000000000000000000000000001");

  RpcCall under = Call("eth_call", {TxObject(FundedAddress(1), c, 100'000), "latest"});
  EXPECT_EQ(Dispatch(kRef, net_, under), Dispatch(Variant("F1"), net_, under));
}

TEST_F(ClientTest, EthCallFailureModes) {
  Address rev = net_.Deploy(Assembler().Push(0).Push(0).Op(op::REVERT).Build(), FundedAddress(0));
  RpcResponse r = Dispatch(kRef, net_, Call("eth_call", {TxObject(FundedAddress(1), rev, 100'000), "latest"}));
  ASSERT_FALSE(r.ok());
  EXPECT_EQ(r.error->message, "execution reverted");

  Json no_to = TxObject(FundedAddress(1), rev, 100'000);
  no_to.erase("to");
  EXPECT_EQ(*Dispatch(kRef, net_, Call("eth_call", {no_to, "latest"})).result, "0x");

  RpcResponse low = Dispatch(kRef, net_, Call("eth_call", {TxObject(FundedAddress(1), rev, 100'000, Word(1)), "latest"}));
  ASSERT_FALSE(low.ok());
}

TEST_F(ClientTest, EstimateGas) {
  Address c = net_.Deploy(Assembler().Push(1).Push(0).Op(op::SSTORE).Op(op::STOP).Build(), FundedAddress(0));
  RpcResponse r = Dispatch(kRef, net_, Call("eth_estimateGas", {TxObject(FundedAddress(1), c, 100'000)}));
  ASSERT_TRUE(r.ok());
  // 21000 + PUSH1 + PUSH1 + SSTORE + STOP.
  EXPECT_EQ(*rpc::ParseQuantity(*r.result), Word(21'000 + 3 + 3 + 100 + 3));

  Address rev = net_.Deploy(Assembler().Push(0).Push(0).Op(op::REVERT).Build(), FundedAddress(0));
  RpcResponse bad = Dispatch(kRef, net_, Call("eth_estimateGas", {TxObject(FundedAddress(1), rev, 100'000)}));
  ASSERT_FALSE(bad.ok());
  EXPECT_EQ(bad.error->code, -32000);
}

TEST_F(ClientTest, EstimateIgnoresFeeUnderF3) {
  Address c = net_.Deploy(Assembler().Op(op::STOP).Build(), FundedAddress(0));
  RpcCall call = Call("eth_estimateGas", {TxObject(FundedAddress(1), c, 100'000, Word(7)), "latest"});
  RpcResponse ref = Dispatch(kRef, net_, call);
  ASSERT_FALSE(ref.ok());
  RpcResponse f3 = Dispatch(Variant("F3"), net_, call);
  ASSERT_TRUE(f3.ok());
  EXPECT_EQ(*f3.result, "0x520b");
}

TEST_F(ClientTest, TraceFaultsF4AndF5) {
  Address c = net_.Deploy(
      Assembler().Op(op::BASEFEE).Push(0).Op(op::SSTORE).Op(op::STOP).Build(), FundedAddress(0));
  Hash32 h = Invoke(c);
  RpcCall call = Call("debug_traceTransaction", {h.Hex()});
  Json ref = *Dispatch(kRef, net_, call).result;
  const Json& logs = ref["structLogs"];
  ASSERT_EQ(logs.size(), 4u);
  EXPECT_EQ(logs[0]["op"], "BASEFEE");
  EXPECT_EQ(logs[1]["stack"][0], "0x3b9aca00");
  EXPECT_EQ(logs[2]["op"], "SSTORE");
  EXPECT_EQ(logs[2]["gasCost"], 100);
  EXPECT_EQ(logs[0]["depth"], 1);
  EXPECT_EQ(ref["failed"], false);

  Json f4 = *Dispatch(Variant("F4"), net_, call).result;
  EXPECT_EQ(f4["structLogs"][2]["gasCost"], 20000);
  EXPECT_EQ(f4["structLogs"][1], logs[1]);

  Json f5 = *Dispatch(Variant("F5"), net_, call).result;
  EXPECT_EQ(f5["structLogs"][1]["stack"][0], "0x0");
  EXPECT_EQ(f5["structLogs"][2], logs[2]);

  RpcResponse missing = Dispatch(kRef, net_, Call("debug_traceTransaction", {Hash32().Hex()}));
  EXPECT_FALSE(missing.ok());
}

TEST_F(ClientTest, UnknownMethodAndBadParams) {
  RpcResponse r = Dispatch(kRef, net_, Call("eth_sendTransaction", Json::array()));
  ASSERT_FALSE(r.ok());
  EXPECT_EQ(r.error->code, rpc::code::kMethodNotFound);
  RpcResponse p = Dispatch(kRef, net_, Call("eth_getBalance", Json::array({"0x1"})));
  ASSERT_FALSE(p.ok());
  EXPECT_EQ(p.error->code, rpc::code::kInvalidParams);
}

TEST_F(ClientTest, WireDispatch) {
  RpcCall c = Call("eth_getBalance", {FundedAddress(0).Hex(), "latest"});
  c.id = 42;
  std::string out = DispatchWire(kRef, net_, rpc::AssembleRequest(c));
  EXPECT_EQ(out, R"({"jsonrpc":"2.0","id":42,"result":"0xd3c21bcecceda1000000"})");
  std::string bad = DispatchWire(kRef, net_, "garbage");
  EXPECT_NE(bad.find("-32600"), std::string::npos);
}

// Generated calls of every method against a populated chain: dispatch leaves
// the world untouched, reference answers fit their schema, and the reference
// answer does not depend on which other clients exist.
TEST(ClientProperties, ReadOnlySchemaConformantAndLocal) {
  Network net(TestConfig(4, {"ref", "a:F1+F2+F3", "b:F4+F5+F6"}));
  Network alone(TestConfig(4, {"ref"}));
  SynthesizeSeedStream(31, 40, net);
  SynthesizeSeedStream(31, 40, alone);
  ASSERT_EQ(net.head().hash, alone.head().hash);
  rpc::ContextView view = rpc::ContextView::FromNetwork(net);
  const auto& reg = rpc::SchemaRegistry::Builtin();
  Hash32 before = net.world().StateHash();
  Rng rng(5);
  for (int i = 0; i < 3000; ++i) {
    const rpc::MethodSchema& s = reg.Get(reg.methods()[i % reg.methods().size()]);
    RpcCall call = rpc::GenerateCall(s, view, rng, i);
    RpcResponse ref = Dispatch(net.clients()[0], net, call);
    EXPECT_EQ(ref, Dispatch(alone.clients()[0], alone, call));
    for (const ClientHandle& c : net.clients()) {
      RpcResponse r = Dispatch(c, net, call);
      std::string wire = rpc::SerializeResponse(call.id, r);
      RpcResponse parsed = rpc::ParseResponse(s.output, wire);
      if (r.ok()) {
        ASSERT_TRUE(parsed.ok()) << c.id << " " << call.method << " " << wire;
      }
    }
  }
  EXPECT_EQ(net.world().StateHash(), before);
}

}  // namespace
}  // namespace ctxfuzz
