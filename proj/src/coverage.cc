#include "ctxfuzz/coverage.h"

#include <cstdio>

#include "ctxfuzz/bytes.h"
#include "ctxfuzz/error.h"

namespace ctxfuzz {

std::string_view HaltName(HaltKind kind) {
  switch (kind) {
    case HaltKind::kStop: return "Stop";
    case HaltKind::kReturn: return "Return";
    case HaltKind::kRevert: return "Revert";
    case HaltKind::kOutOfGas: return "OutOfGas";
    case HaltKind::kStackUnderflow: return "StackUnderflow";
    case HaltKind::kStackOverflow: return "StackOverflow";
    case HaltKind::kInvalidJump: return "InvalidJump";
    case HaltKind::kInvalidOpcode: return "InvalidOpcode";
    case HaltKind::kDepthExceeded: return "DepthExceeded";
  }
  return "?";
}

HaltKind HaltFromName(std::string_view name) {
  for (int i = 0; i < kHaltKindCount; ++i) {
    auto kind = static_cast<HaltKind>(i);
    if (HaltName(kind) == name) return kind;
  }
  throw Error(Errc::kSeedFormat, "unknown halt kind: " + std::string(name));
}

CoverageUnit CoverageUnit::Parse(std::string_view text) {
  if (text.size() < 7 || text[1] != ':' || text[4] != ':') {
    throw Error(Errc::kSeedFormat, "bad coverage unit: " + std::string(text));
  }
  uint8_t a = FromHex(text.substr(2, 2)).at(0);
  if (text[0] == 'e') return Edge(a, FromHex(text.substr(5, 2)).at(0));
  if (text[0] == 'h') return Halt(a, HaltFromName(text.substr(5)));
  throw Error(Errc::kSeedFormat, "bad coverage unit: " + std::string(text));
}

std::string CoverageUnit::ToString() const {
  char buf[32];
  if (is_edge()) {
    std::snprintf(buf, sizeof(buf), "e:%02x:%02x", first(), second());
    return buf;
  }
  std::snprintf(buf, sizeof(buf), "h:%02x:", first());
  return std::string(buf) + std::string(HaltName(halt_kind()));
}

size_t CoverageMap::Merge(const CoverageMap& other) {
  size_t before = units_.size();
  units_.insert(other.units_.begin(), other.units_.end());
  return units_.size() - before;
}

size_t CoverageMap::CountNew(const CoverageMap& other) const {
  size_t n = 0;
  for (CoverageUnit u : other.units_) n += units_.contains(u) ? 0 : 1;
  return n;
}

CoverageMap MergeCoverage(const CoverageMap& a, const CoverageMap& b) {
  CoverageMap out = a;
  out.Merge(b);
  return out;
}

}  // namespace ctxfuzz
