#include "ctxfuzz/oracle.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <sstream>

#include "ctxfuzz/error.h"
#include "ctxfuzz/keccak.h"
#include "ctxfuzz/rpc/hexfmt.h"
#include "ctxfuzz/rpc/wire.h"
#include "embedded.h"

namespace ctxfuzz::oracle {
namespace {

constexpr std::array<std::pair<std::string_view, Rule::Type>, 4> kRuleNames = {{
    {"EmptyCodeNullEqualsHex0x", Rule::kEmptyCodeNullEqualsHex0x},
    {"IgnoreField", Rule::kIgnoreField},
    {"QuantityCanonicalize", Rule::kQuantityCanonicalize},
    {"CaseFoldHex", Rule::kCaseFoldHex},
}};

std::string_view RuleName(Rule::Type t) {
  for (const auto& [n, v] : kRuleNames) {
    if (v == t) return n;
  }
  return "";
}

std::vector<std::string> SplitPointer(std::string_view p) {
  std::vector<std::string> out;
  size_t i = 1;
  while (i <= p.size()) {
    size_t j = p.find('/', i);
    if (j == std::string_view::npos) j = p.size();
    out.emplace_back(p.substr(i, j - i));
    i = j + 1;
  }
  return out;
}

void EraseMemberEverywhere(Json& v, const std::string& name) {
  if (v.is_object()) {
    v.erase(name);
    for (auto& [k, child] : v.items()) EraseMemberEverywhere(child, name);
  } else if (v.is_array()) {
    for (auto& child : v) EraseMemberEverywhere(child, name);
  }
}

void ErasePattern(Json& v, const std::vector<std::string>& segs, size_t i) {
  if (i + 1 == segs.size()) {
    if (v.is_object()) {
      if (segs[i] == "*") {
        v = Json::object();
      } else {
        v.erase(segs[i]);
      }
    } else if (v.is_array()) {
      if (segs[i] == "*") {
        v = Json::array();
      } else if (std::all_of(segs[i].begin(), segs[i].end(), ::isdigit) && !segs[i].empty()) {
        size_t idx = std::stoul(segs[i]);
        if (idx < v.size()) v.erase(idx);
      }
    }
    return;
  }
  if (v.is_object()) {
    for (auto& [k, child] : v.items()) {
      if (segs[i] == "*" || segs[i] == k) ErasePattern(child, segs, i + 1);
    }
  } else if (v.is_array()) {
    for (size_t k = 0; k < v.size(); ++k) {
      if (segs[i] == "*" || segs[i] == std::to_string(k)) ErasePattern(v[k], segs, i + 1);
    }
  }
}

void CanonicalizeQuantities(Json& v, const rpc::OutputNode& node) {
  using Shape = rpc::OutputNode::Shape;
  switch (node.shape) {
    case Shape::kScalar:
      if (node.scalar == rpc::ScalarKind::kQuantity && v.is_string() &&
          rpc::IsQuantity(v.get_ref<const std::string&>())) {
        v = Word::FromHex(v.get<std::string>()).Hex();
      }
      return;
    case Shape::kNullable:
      if (!v.is_null()) CanonicalizeQuantities(v, *node.items[0]);
      return;
    case Shape::kOneOf:
      for (const auto& alt : node.items) {
        if (rpc::MatchesOutput(*alt, v)) {
          CanonicalizeQuantities(v, *alt);
          return;
        }
      }
      return;
    case Shape::kArray:
      if (v.is_array()) {
        for (auto& e : v) CanonicalizeQuantities(e, *node.items[0]);
      }
      return;
    case Shape::kObject:
      if (v.is_object()) {
        for (auto& [k, child] : v.items()) {
          if (const auto* f = node.FindField(k)) CanonicalizeQuantities(child, *f->node);
        }
      }
      return;
  }
}

void FoldHexCase(Json& v) {
  if (v.is_string()) {
    auto& s = v.get_ref<std::string&>();
    if (rpc::IsQuantity(s) || rpc::IsData(s)) {
      std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    }
  } else if (v.is_structured()) {
    for (auto& child : v) FoldHexCase(child);
  }
}

std::string KindOf(const Json* v) {
  if (v == nullptr) return "absent";
  switch (v->type()) {
    case Json::value_t::null: return "null";
    case Json::value_t::boolean: return "bool";
    case Json::value_t::number_integer:
    case Json::value_t::number_unsigned:
    case Json::value_t::number_float: return "number";
    case Json::value_t::string: return "string";
    case Json::value_t::array: return "array";
    case Json::value_t::object: return "object";
    default: return "other";
  }
}

bool IsZeroish(const Json* v) {
  if (v == nullptr || v->is_null()) return true;
  if (v->is_boolean()) return !v->get<bool>();
  if (v->is_number()) return v->get<double>() == 0.0;
  if (v->is_string()) {
    const auto& s = v->get_ref<const std::string&>();
    if (!rpc::IsData(s) && !rpc::IsQuantity(s)) return s.empty();
    return std::all_of(s.begin() + 2, s.end(), [](char c) { return c == '0'; });
  }
  return v->empty();
}

class Differ {
 public:
  void Diff(const Json* a, const Json* b, const std::string& path, const std::string& wild) {
    if (a != nullptr && b != nullptr && KindOf(a) == KindOf(b)) {
      if (a->is_object()) {
        for (const auto& [k, av] : a->items()) {
          const Json* bv = b->contains(k) ? &(*b)[k] : nullptr;
          Diff(&av, bv, path + "/" + k, wild + "/" + k);
        }
        for (const auto& [k, bv] : b->items()) {
          if (!a->contains(k)) Diff(nullptr, &bv, path + "/" + k, wild + "/" + k);
        }
        return;
      }
      if (a->is_array()) {
        size_t n = std::max(a->size(), b->size());
        for (size_t i = 0; i < n; ++i) {
          Diff(i < a->size() ? &(*a)[i] : nullptr, i < b->size() ? &(*b)[i] : nullptr,
               path + "/" + std::to_string(i), wild + "/*");
        }
        return;
      }
      if (*a == *b) return;
    }
    Record(path, wild,
           KindOf(a) + "/" + KindOf(b) + "/" + (IsZeroish(a) ? "z" : "n") + (IsZeroish(b) ? "z" : "n"));
  }

  void Record(const std::string& path, const std::string& wild, const std::string& tag) {
    paths_.insert(path);
    classes_.insert({wild, tag});
  }

  std::set<std::string> paths_;
  std::set<std::pair<std::string, std::string>> classes_;
};

Json ErrorJson(const rpc::RpcError& e) {
  Json j = Json::object();
  j["code"] = e.code;
  j["message"] = e.message;
  return j;
}

}  // namespace

NormalizationRules NormalizationRules::Default() {
  static const NormalizationRules rules = FromJson(Json::parse(DefaultRulesDocument()));
  return rules;
}

NormalizationRules NormalizationRules::FromJson(const Json& doc) {
  if (!doc.is_array()) throw Error(Errc::kRulesFormat, "rules file must be a JSON array");
  NormalizationRules out;
  for (const auto& r : doc) {
    if (!r.is_object() || !r.contains("type") || !r["type"].is_string()) {
      throw Error(Errc::kRulesFormat, "rule needs a string 'type'");
    }
    for (const auto& [k, v] : r.items()) {
      if (k != "type" && k != "path" && k != "method") {
        throw Error(Errc::kRulesFormat, "unknown rule key '" + k + "'");
      }
      if (!v.is_string()) throw Error(Errc::kRulesFormat, "rule key '" + k + "' must be a string");
    }
    Rule rule;
    std::string type = r["type"].get<std::string>();
    auto it = std::find_if(kRuleNames.begin(), kRuleNames.end(),
                           [&](const auto& e) { return e.first == type; });
    if (it == kRuleNames.end()) throw Error(Errc::kRulesFormat, "unknown rule type '" + type + "'");
    rule.type = it->second;
    rule.path = r.value("path", "");
    rule.method = r.value("method", "");
    if (rule.type == Rule::kIgnoreField && rule.path.empty()) {
      throw Error(Errc::kRulesFormat, "IgnoreField needs a path");
    }
    out.rules.push_back(std::move(rule));
  }
  return out;
}

NormalizationRules NormalizationRules::LoadFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIo, "cannot open rules file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  Json doc = Json::parse(buf.str(), nullptr, false);
  if (doc.is_discarded()) throw Error(Errc::kRulesFormat, path + ": not JSON");
  return FromJson(doc);
}

Json NormalizationRules::ToJson() const {
  Json out = Json::array();
  for (const auto& r : rules) {
    Json j = Json::object();
    j["type"] = RuleName(r.type);
    if (!r.path.empty()) j["path"] = r.path;
    if (!r.method.empty()) j["method"] = r.method;
    out.push_back(std::move(j));
  }
  return out;
}

NormalizationRules NormalizationRules::Without(Rule::Type type) const {
  NormalizationRules out;
  for (const auto& r : rules) {
    if (r.type != type) out.rules.push_back(r);
  }
  return out;
}

Json Normalize(const Json& value, const NormalizationRules& rules, std::string_view method,
               const rpc::OutputNode* schema) {
  Json v = value;
  for (const Rule& r : rules.rules) {
    if (!r.method.empty() && r.method != method) continue;
    switch (r.type) {
      case Rule::kEmptyCodeNullEqualsHex0x:
        if (method == "eth_getCode" && v.is_null()) v = "0x";
        break;
      case Rule::kIgnoreField:
        if (r.path.front() == '/') {
          ErasePattern(v, SplitPointer(r.path), 0);
        } else {
          EraseMemberEverywhere(v, r.path);
        }
        break;
      case Rule::kQuantityCanonicalize:
        if (schema != nullptr) CanonicalizeQuantities(v, *schema);
        break;
      case Rule::kCaseFoldHex:
        FoldHexCase(v);
        break;
    }
  }
  return v;
}

std::optional<Divergence> Compare(const rpc::RpcCall& call,
                                  const std::map<std::string, rpc::RpcResponse>& responses,
                                  const NormalizationRules& rules) {
  if (responses.size() < 2) throw Error(Errc::kTooFewClients, "compare needs two responses");
  const rpc::MethodSchema* schema = rpc::SchemaRegistry::Builtin().Find(call.method);
  const rpc::OutputNode* out_schema = schema ? schema->output.get() : nullptr;

  auto normalized = [&](const rpc::RpcResponse& r) {
    return Normalize(*r.result, rules, call.method, out_schema);
  };
  const rpc::RpcResponse& pivot = responses.begin()->second;
  std::optional<Json> pivot_value;
  if (pivot.ok()) pivot_value = normalized(pivot);

  Differ d;
  for (auto it = std::next(responses.begin()); it != responses.end(); ++it) {
    const rpc::RpcResponse& other = it->second;
    if (pivot.ok() != other.ok()) {
      d.Record("/", "/", "kind:" + std::string(pivot.ok() ? "result" : "error") + "/" +
                             (other.ok() ? "result" : "error"));
    } else if (pivot.ok()) {
      Json v = normalized(other);
      d.Diff(&*pivot_value, &v, "/result", "/result");
    } else {
      Json a = ErrorJson(*pivot.error);
      Json b = ErrorJson(*other.error);
      d.Diff(&a, &b, "/error", "/error");
    }
  }
  if (d.paths_.empty()) return std::nullopt;
  Divergence div;
  div.call = call;
  div.responses = responses;
  div.diff_paths.assign(d.paths_.begin(), d.paths_.end());
  div.classes = std::move(d.classes_);
  return div;
}

Hash32 Signature(const Divergence& d) {
  std::string enc = d.call.method + "\n";
  for (const auto& [path, tag] : d.classes) enc += path + "\t" + tag + "\n";
  return Keccak256(std::span(reinterpret_cast<const uint8_t*>(enc.data()), enc.size()));
}

Json DivergenceReport::ToJson() const {
  Json j = Json::object();
  j["signature"] = signature.Hex();
  j["method"] = divergence.call.method;
  j["diffPaths"] = divergence.diff_paths;
  Json ctx = Json::object();
  ctx["block"] = context_block;
  ctx["hash"] = context_hash.Hex();
  j["context"] = std::move(ctx);
  j["call"] = Json::parse(rpc::AssembleRequest(divergence.call));
  Json responses = Json::object();
  for (const auto& [id, r] : divergence.responses) {
    responses[id] = Json::parse(rpc::SerializeResponse(divergence.call.id, r));
  }
  j["responses"] = std::move(responses);
  j["firstSeen"] = first_seen;
  return j;
}

StoredReport StoredReport::FromJson(const Json& j) {
  try {
    StoredReport r;
    r.signature = Hash32::FromHex(j.at("signature").get<std::string>());
    r.method = j.at("method").get<std::string>();
    r.diff_paths = j.at("diffPaths").get<std::vector<std::string>>();
    r.context_block = j.at("context").at("block").get<uint64_t>();
    r.context_hash = Hash32::FromHex(j.at("context").at("hash").get<std::string>());
    r.call = rpc::ParseRequest(j.at("call").dump());
    r.responses = j.at("responses");
    r.first_seen = j.at("firstSeen").get<uint64_t>();
    return r;
  } catch (const Json::exception& e) {
    throw Error(Errc::kStoreIo, std::string("malformed report: ") + e.what());
  }
}

std::vector<StoredReport> LoadReports(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIo, "cannot open " + path);
  std::vector<StoredReport> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded()) throw Error(Errc::kStoreIo, "malformed report line in " + path);
    out.push_back(StoredReport::FromJson(j));
  }
  return out;
}

ReportStore::ReportStore(const std::string& path) : path_(path) {
  std::ofstream out(path_, std::ios::trunc);
  if (!out) throw Error(Errc::kStoreIo, "cannot create " + path_);
}

RecordResult ReportStore::Record(const DivergenceReport& report) {
  std::lock_guard lock(mu_);
  if (!seen_.insert(report.signature).second) return RecordResult::kDuplicate;
  reports_.push_back(report);
  if (!path_.empty()) {
    std::ofstream out(path_, std::ios::app);
    out << report.ToJson().dump() << "\n";
    if (!out) throw Error(Errc::kStoreIo, "cannot append to " + path_);
  }
  return RecordResult::kNew;
}

bool ReportStore::Contains(const Hash32& signature) const {
  std::lock_guard lock(mu_);
  return seen_.contains(signature);
}

size_t ReportStore::size() const {
  std::lock_guard lock(mu_);
  return reports_.size();
}

std::vector<DivergenceReport> ReportStore::reports() const {
  std::lock_guard lock(mu_);
  return reports_;
}

}  // namespace ctxfuzz::oracle
