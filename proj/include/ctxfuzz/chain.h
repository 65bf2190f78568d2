#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ctxfuzz/evm.h"
#include "ctxfuzz/state.h"
#include "ctxfuzz/word.h"

namespace ctxfuzz {

struct Transaction {
  Address from;
  std::optional<Address> to;  // absent for deployments
  Word value;
  Bytes data;
  uint64_t gas_limit = 0;
  Word max_fee_per_gas;
  uint64_t nonce = 0;

  // Keccak-256 over the canonical field encoding (see FORMATS.md).
  Hash32 Hash() const;

  friend bool operator==(const Transaction&, const Transaction&) = default;
};

enum class TxStatus { kSuccess, kFailed };

struct Receipt {
  TxStatus status = TxStatus::kSuccess;
  uint64_t gas_used = 0;
  std::optional<Address> contract_address;
  HaltKind halt = HaltKind::kStop;

  friend bool operator==(const Receipt&, const Receipt&) = default;
};

struct Block {
  BlockContext context;
  std::vector<Transaction> transactions;
  std::vector<Receipt> receipts;
  uint64_t gas_used = 0;
  Hash32 hash;
};

// keccak256(deployer ‖ nonce as 8 big-endian bytes), last 20 bytes.
Address ContractAddress(const Address& deployer, uint64_t nonce);

enum class FaultId {
  kUnlimitedEthCallGas,      // F1
  kNullEmptyCode,            // F2
  kEstimateIgnoresFeeParam,  // F3
  kTraceWrongGasCost,        // F4
  kTraceWrongBasefee,        // F5
  kTxIndexOffByOne,          // F6
};

inline constexpr int kFaultCount = 6;

// "F1".."F6".
std::string_view FaultShortName(FaultId id);
// "F1_UnlimitedEthCallGas" and so on.
std::string_view FaultLongName(FaultId id);
// Accepts either name form; throws Error(kConfigInvalid).
FaultId ParseFault(std::string_view name);

struct FaultSpec {
  FaultId id = FaultId::kUnlimitedEthCallGas;
  std::map<std::string, std::string> params;

  friend bool operator==(const FaultSpec&, const FaultSpec&) = default;
};

struct ClientHandle {
  std::string id;
  std::vector<FaultSpec> faults;

  bool HasFault(FaultId f) const;
  friend bool operator==(const ClientHandle&, const ClientHandle&) = default;
};

// Parses "id" or "id:F1+F4".
ClientHandle ParseClientSpec(std::string_view text);
std::string ClientSpecString(const ClientHandle& client);

struct NetworkConfig {
  std::vector<ClientHandle> clients;  // first is the reference client
  std::map<Address, Word> accounts;   // genesis funding
  uint64_t gas_limit = 30'000'000;
  Word base_fee = Word(1'000'000'000);
  uint64_t genesis_timestamp = 1'700'000'000;
  uint64_t block_interval = 12;
  // Moves the base fee by up to 1/8 per block towards half-full blocks.
  bool adjust_base_fee = false;
};

struct TxOutcome {
  Receipt receipt;
  ExecResult exec;  // empty trace for deployments
  std::map<Address, Account> changed;
};

// Validates and executes `tx` on top of `pre` in `block`. Pure: the caller
// applies `changed`. Throws Error with kNonceMismatch, kFeeBelowBase,
// kInsufficientFunds or kIntrinsicGasTooLow.
TxOutcome ProcessTransaction(const StateView& pre, const Transaction& tx,
                             const BlockContext& block);

// Execution context of a call transaction inside `block`; gas is what remains
// after the intrinsic cost.
ExecContext CallContext(const Transaction& tx, const BlockContext& block);

// Context of the block after `parent`.
BlockContext FollowingContext(const BlockContext& parent, uint64_t parent_gas_used,
                              const Hash32& parent_hash, const NetworkConfig& config);

class Network;

// State as of the end of a given block.
class HistoricalView : public StateView {
 public:
  HistoricalView(const Network& network, uint64_t block) : network_(&network), block_(block) {}
  const Account* Find(const Address& address) const override;

 private:
  const Network* network_;
  uint64_t block_;
};

struct TxLocation {
  uint64_t block = 0;
  uint32_t index = 0;
};

class Network {
 public:
  // Throws kZeroClients, kDuplicateClientId, kReferenceHasFaults.
  explicit Network(NetworkConfig config);

  // One block per transaction.
  Receipt Submit(const Transaction& tx);
  Address Deploy(const OpcodeSeq& code, const Address& deployer);

  const NetworkConfig& config() const { return config_; }
  const std::vector<ClientHandle>& clients() const { return config_.clients; }
  const std::vector<Block>& blocks() const { return blocks_; }
  const Block& head() const { return blocks_.back(); }
  uint64_t head_number() const { return blocks_.size() - 1; }
  const WorldState& world() const { return world_; }

  HistoricalView StateAt(uint64_t block) const { return HistoricalView(*this, block); }
  // Context for the block that the next transaction will produce.
  BlockContext NextBlockContext() const;
  std::optional<TxLocation> FindTransaction(const Hash32& hash) const;
  const Transaction* TransactionAt(const TxLocation& loc) const;

  // Contracts created by deployments, in creation order.
  const std::vector<Address>& contracts() const { return contracts_; }
  // Genesis-funded accounts, ascending.
  std::vector<Address> funded_accounts() const;

 private:
  friend class HistoricalView;

  void Commit(const BlockContext& ctx, const Transaction& tx, const TxOutcome& out);

  NetworkConfig config_;
  std::vector<Block> blocks_;
  WorldState world_;
  // Versions of each account, keyed by the block that produced them.
  std::map<Address, std::vector<std::pair<uint64_t, Account>>> history_;
  std::map<Hash32, TxLocation> tx_index_;
  std::vector<Address> contracts_;
};

}  // namespace ctxfuzz
