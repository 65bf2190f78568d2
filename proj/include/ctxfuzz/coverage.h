#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <string_view>

namespace ctxfuzz {

enum class HaltKind : uint8_t {
  kStop,
  kReturn,
  kRevert,
  kOutOfGas,
  kStackUnderflow,
  kStackOverflow,
  kInvalidJump,
  kInvalidOpcode,
  kDepthExceeded,
};

inline constexpr int kHaltKindCount = 9;

std::string_view HaltName(HaltKind kind);
HaltKind HaltFromName(std::string_view name);  // throws Error(kSeedFormat)

// Stop and Return commit state; everything else (Revert included) rolls back.
inline bool IsSuccess(HaltKind kind) { return kind == HaltKind::kStop || kind == HaltKind::kReturn; }

// Either Edge(from, to) for consecutive opcodes in one frame or
// Halt(opcode, kind) for the way a frame ended. Packed into one integer so a
// map is a plain ordered set.
class CoverageUnit {
 public:
  static CoverageUnit Edge(uint8_t from, uint8_t to) { return CoverageUnit(from << 8 | to); }
  static CoverageUnit Halt(uint8_t opcode, HaltKind kind) {
    return CoverageUnit(kHaltTag | opcode << 8 | static_cast<uint32_t>(kind));
  }
  static CoverageUnit FromKey(uint32_t key) { return CoverageUnit(key); }
  // "e:60:01" or "h:00:Stop"
  static CoverageUnit Parse(std::string_view text);

  bool is_edge() const { return (key_ & kHaltTag) == 0; }
  uint8_t first() const { return static_cast<uint8_t>(key_ >> 8); }
  uint8_t second() const { return static_cast<uint8_t>(key_); }
  HaltKind halt_kind() const { return static_cast<HaltKind>(key_ & 0xff); }
  uint32_t key() const { return key_; }
  std::string ToString() const;

  friend auto operator<=>(const CoverageUnit&, const CoverageUnit&) = default;

 private:
  static constexpr uint32_t kHaltTag = 1u << 16;
  explicit CoverageUnit(uint32_t key) : key_(key) {}
  uint32_t key_;
};

class CoverageMap {
 public:
  void Insert(CoverageUnit unit) { units_.insert(unit); }
  bool Contains(CoverageUnit unit) const { return units_.contains(unit); }
  // Returns the number of units that were not already present.
  size_t Merge(const CoverageMap& other);
  // Number of units in `other` missing from this map.
  size_t CountNew(const CoverageMap& other) const;
  size_t size() const { return units_.size(); }
  bool empty() const { return units_.empty(); }
  const std::set<CoverageUnit>& units() const { return units_; }

  friend bool operator==(const CoverageMap&, const CoverageMap&) = default;

 private:
  std::set<CoverageUnit> units_;
};

CoverageMap MergeCoverage(const CoverageMap& a, const CoverageMap& b);

}  // namespace ctxfuzz
