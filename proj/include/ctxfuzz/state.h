#pragma once

#include <cstdint>
#include <map>

#include "ctxfuzz/code.h"
#include "ctxfuzz/word.h"

namespace ctxfuzz {

struct Account {
  Word balance;
  uint64_t nonce = 0;
  OpcodeSeq code;
  std::map<Word, Word> storage;  // zero values are never stored

  Word Load(const Word& key) const {
    auto it = storage.find(key);
    return it == storage.end() ? Word() : it->second;
  }
  bool IsEmpty() const { return balance.IsZero() && nonce == 0 && code.empty() && storage.empty(); }

  friend bool operator==(const Account&, const Account&) = default;
};

// Read access to accounts. Absent accounts read as empty.
class StateView {
 public:
  virtual ~StateView() = default;
  virtual const Account* Find(const Address& address) const = 0;

  Word Balance(const Address& a) const;
  Word Storage(const Address& a, const Word& key) const;
  const OpcodeSeq& Code(const Address& a) const;
  uint64_t Nonce(const Address& a) const;
};

class WorldState : public StateView {
 public:
  const Account* Find(const Address& address) const override;
  Account& Mutable(const Address& address) { return accounts_[address]; }
  void Put(const Address& address, Account account);
  void Erase(const Address& address) { accounts_.erase(address); }
  const std::map<Address, Account>& accounts() const { return accounts_; }

  // Canonical content hash; empty accounts do not contribute.
  Hash32 StateHash() const;

  friend bool operator==(const WorldState&, const WorldState&) = default;

 private:
  std::map<Address, Account> accounts_;
};

// Overrides whole accounts of a base view without copying it.
class OverlayView : public StateView {
 public:
  explicit OverlayView(const StateView& base) : base_(&base) {}
  const Account* Find(const Address& address) const override;
  void Put(const Address& address, Account account) { overrides_[address] = std::move(account); }
  Account& Mutable(const Address& address);

 private:
  const StateView* base_;
  std::map<Address, Account> overrides_;
};

struct AccountDelta {
  Word balance_delta;  // new - old, modulo 2^256
  std::map<Word, Word> storage_writes;

  friend bool operator==(const AccountDelta&, const AccountDelta&) = default;
};

using StateDelta = std::map<Address, AccountDelta>;

WorldState ApplyStateDelta(WorldState world, const StateDelta& delta);
// The delta equivalent to applying `first` and then `second`.
StateDelta MergeDeltas(const StateDelta& first, const StateDelta& second);

}  // namespace ctxfuzz
