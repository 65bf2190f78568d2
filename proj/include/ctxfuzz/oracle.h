#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ctxfuzz/rpc/schema.h"
#include "ctxfuzz/rpc/types.h"
#include "ctxfuzz/word.h"

namespace ctxfuzz::oracle {

using rpc::Json;

struct Rule {
  enum Type { kEmptyCodeNullEqualsHex0x, kIgnoreField, kQuantityCanonicalize, kCaseFoldHex };
  Type type = kQuantityCanonicalize;
  // IgnoreField: a bare member name matches that member anywhere; a pattern
  // starting with "/" is a pointer into the result where "*" matches any
  // single segment.
  std::string path;
  std::string method;  // empty: every method

  friend bool operator==(const Rule&, const Rule&) = default;
};

struct NormalizationRules {
  std::vector<Rule> rules;

  // The shipped benign set: rules/default_rules.json.
  static NormalizationRules Default();
  // JSON array of {"type", "path"?, "method"?}. Throws Error(kRulesFormat).
  static NormalizationRules FromJson(const Json& doc);
  static NormalizationRules LoadFile(const std::string& path);
  Json ToJson() const;

  // Copy without rules of the given type.
  NormalizationRules Without(Rule::Type type) const;
};

// Applies the rules in order to a result value. `schema` guides
// QuantityCanonicalize; without it that rule is a no-op.
Json Normalize(const Json& value, const NormalizationRules& rules, std::string_view method,
               const rpc::OutputNode* schema);

struct Divergence {
  rpc::RpcCall call;
  std::map<std::string, rpc::RpcResponse> responses;  // by client id
  std::vector<std::string> diff_paths;                // sorted, concrete indices
  // (path with array indices as "*", class tag) pairs feeding the signature.
  std::set<std::pair<std::string, std::string>> classes;
};

// Compares every response with the one of the lexicographically first client.
// Throws Error(kTooFewClients) for fewer than two responses.
std::optional<Divergence> Compare(const rpc::RpcCall& call,
                                  const std::map<std::string, rpc::RpcResponse>& responses,
                                  const NormalizationRules& rules);

// keccak256 over the method, the wildcarded paths and their class tags.
Hash32 Signature(const Divergence& d);

struct DivergenceReport {
  Divergence divergence;
  Hash32 signature;
  uint64_t context_block = 0;
  Hash32 context_hash;
  uint64_t first_seen = 0;

  Json ToJson() const;
};

// Record parsed back from a reports.jsonl line.
struct StoredReport {
  Hash32 signature;
  std::string method;
  std::vector<std::string> diff_paths;
  uint64_t context_block = 0;
  Hash32 context_hash;
  rpc::RpcCall call;
  Json responses;
  uint64_t first_seen = 0;

  static StoredReport FromJson(const Json& j);
};

std::vector<StoredReport> LoadReports(const std::string& path);

enum class RecordResult { kNew, kDuplicate };

// Insertion-ordered, signature-deduplicated report log. With a path, every new
// report is appended to that file as one JSON line. Safe to share between
// threads.
class ReportStore {
 public:
  ReportStore() = default;
  // Truncates `path`. Throws Error(kStoreIo).
  explicit ReportStore(const std::string& path);

  RecordResult Record(const DivergenceReport& report);
  bool Contains(const Hash32& signature) const;
  size_t size() const;
  std::vector<DivergenceReport> reports() const;

 private:
  mutable std::mutex mu_;
  std::string path_;
  std::set<Hash32> seen_;
  std::vector<DivergenceReport> reports_;
};

}  // namespace ctxfuzz::oracle
