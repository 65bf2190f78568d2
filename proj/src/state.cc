#include "ctxfuzz/state.h"

#include "ctxfuzz/keccak.h"

namespace ctxfuzz {
namespace {

const OpcodeSeq kEmptyCode;

void AppendU64(Bytes& out, uint64_t v) {
  for (int i = 7; i >= 0; --i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void AppendWord(Bytes& out, const Word& w) {
  auto be = w.ToBigEndian();
  out.insert(out.end(), be.begin(), be.end());
}

}  // namespace

Word StateView::Balance(const Address& a) const {
  const Account* acct = Find(a);
  return acct ? acct->balance : Word();
}

Word StateView::Storage(const Address& a, const Word& key) const {
  const Account* acct = Find(a);
  return acct ? acct->Load(key) : Word();
}

const OpcodeSeq& StateView::Code(const Address& a) const {
  const Account* acct = Find(a);
  return acct ? acct->code : kEmptyCode;
}

uint64_t StateView::Nonce(const Address& a) const {
  const Account* acct = Find(a);
  return acct ? acct->nonce : 0;
}

const Account* WorldState::Find(const Address& address) const {
  auto it = accounts_.find(address);
  return it == accounts_.end() ? nullptr : &it->second;
}

void WorldState::Put(const Address& address, Account account) {
  accounts_[address] = std::move(account);
}

Hash32 WorldState::StateHash() const {
  Bytes buf;
  for (const auto& [addr, acct] : accounts_) {
    if (acct.IsEmpty()) continue;
    buf.insert(buf.end(), addr.bytes.begin(), addr.bytes.end());
    AppendWord(buf, acct.balance);
    AppendU64(buf, acct.nonce);
    AppendU64(buf, acct.code.size());
    buf.insert(buf.end(), acct.code.bytes.begin(), acct.code.bytes.end());
    AppendU64(buf, acct.storage.size());
    for (const auto& [k, v] : acct.storage) {
      AppendWord(buf, k);
      AppendWord(buf, v);
    }
  }
  return Keccak256(buf);
}

const Account* OverlayView::Find(const Address& address) const {
  auto it = overrides_.find(address);
  if (it != overrides_.end()) return &it->second;
  return base_->Find(address);
}

Account& OverlayView::Mutable(const Address& address) {
  auto it = overrides_.find(address);
  if (it != overrides_.end()) return it->second;
  const Account* base = base_->Find(address);
  return overrides_[address] = base ? *base : Account{};
}

WorldState ApplyStateDelta(WorldState world, const StateDelta& delta) {
  for (const auto& [addr, d] : delta) {
    Account& acct = world.Mutable(addr);
    acct.balance += d.balance_delta;
    for (const auto& [k, v] : d.storage_writes) {
      if (v.IsZero()) {
        acct.storage.erase(k);
      } else {
        acct.storage[k] = v;
      }
    }
    if (acct.IsEmpty()) world.Erase(addr);
  }
  return world;
}

StateDelta MergeDeltas(const StateDelta& first, const StateDelta& second) {
  StateDelta out = first;
  for (const auto& [addr, d] : second) {
    AccountDelta& merged = out[addr];
    merged.balance_delta += d.balance_delta;
    for (const auto& [k, v] : d.storage_writes) merged.storage_writes[k] = v;
  }
  return out;
}

}  // namespace ctxfuzz
