#include "ctxfuzz/rpc/schema.h"

#include <array>
#include <fstream>
#include <sstream>
#include <utility>

#include "ctxfuzz/error.h"
#include "ctxfuzz/rpc/hexfmt.h"
#include "embedded.h"

namespace ctxfuzz::rpc {
namespace {

constexpr std::array<std::pair<std::string_view, ScalarKind>, 9> kScalarNames = {{
    {"Quantity", ScalarKind::kQuantity},
    {"Integer", ScalarKind::kInteger},
    {"Float", ScalarKind::kFloat},
    {"Bool", ScalarKind::kBool},
    {"Data", ScalarKind::kData},
    {"Address", ScalarKind::kAddress},
    {"Hash", ScalarKind::kHash},
    {"String", ScalarKind::kString},
    {"Any", ScalarKind::kAny},
}};

constexpr std::array<std::pair<std::string_view, ParamKind::Kind>, 9> kParamNames = {{
    {"Quantity", ParamKind::kQuantity},
    {"Address", ParamKind::kAddress},
    {"DataBytes", ParamKind::kDataBytes},
    {"Boolean", ParamKind::kBoolean},
    {"BlockTag", ParamKind::kBlockTag},
    {"TransactionObject", ParamKind::kTransactionObject},
    {"StateOverride", ParamKind::kStateOverride},
    {"FloatArray", ParamKind::kFloatArray},
    {"TransactionHash", ParamKind::kTransactionHash},
}};

constexpr std::array<std::pair<std::string_view, QuantityRole>, 5> kRoleNames = {{
    {"Gas", QuantityRole::kGas},
    {"Fee", QuantityRole::kFee},
    {"Value", QuantityRole::kValue},
    {"Index", QuantityRole::kIndex},
    {"Generic", QuantityRole::kGeneric},
}};

template <typename T, size_t N>
T Lookup(const std::array<std::pair<std::string_view, T>, N>& table, const std::string& name,
         const char* what) {
  for (const auto& [n, v] : table) {
    if (n == name) return v;
  }
  throw Error(Errc::kSchemaFormat, std::string("unknown ") + what + " '" + name + "'");
}

bool ScalarMatches(ScalarKind kind, const Json& v) {
  switch (kind) {
    case ScalarKind::kQuantity: return v.is_string() && IsQuantity(v.get_ref<const std::string&>());
    case ScalarKind::kInteger: return v.is_number_integer();
    case ScalarKind::kFloat: return v.is_number();
    case ScalarKind::kBool: return v.is_boolean();
    case ScalarKind::kData: return v.is_string() && IsData(v.get_ref<const std::string&>());
    case ScalarKind::kAddress: return v.is_string() && IsAddress(v.get_ref<const std::string&>());
    case ScalarKind::kHash: return v.is_string() && IsHash(v.get_ref<const std::string&>());
    case ScalarKind::kString: return v.is_string();
    case ScalarKind::kAny: return true;
  }
  return false;
}

bool IsBlockTag(const Json& v) {
  if (!v.is_string()) return false;
  const auto& s = v.get_ref<const std::string&>();
  return s == "latest" || s == "earliest" || s == "pending" || IsQuantity(s);
}

bool IsTransactionObject(const Json& v, std::string* why) {
  if (!v.is_object()) return false;
  for (const auto& [key, field] : v.items()) {
    bool ok;
    if (key == "from" || key == "to") {
      ok = field.is_null() || ParseAddress(field).has_value();
    } else if (key == "gas" || key == "maxFeePerGas" || key == "value" || key == "nonce") {
      ok = ParseQuantity(field).has_value();
    } else if (key == "data" || key == "input") {
      ok = ParseData(field).has_value();
    } else {
      if (why) *why = "unknown transaction field '" + key + "'";
      return false;
    }
    if (!ok) {
      if (why) *why = "bad transaction field '" + key + "'";
      return false;
    }
  }
  return true;
}

bool IsStateOverride(const Json& v) {
  if (!v.is_object()) return false;
  for (const auto& [addr, entry] : v.items()) {
    if (!IsAddress(addr) || !entry.is_object()) return false;
    for (const auto& [key, field] : entry.items()) {
      if (key == "balance" || key == "nonce") {
        if (!ParseQuantity(field)) return false;
      } else if (key == "code") {
        if (!ParseData(field)) return false;
      } else if (key == "state") {
        if (!field.is_object()) return false;
        for (const auto& [slot, value] : field.items()) {
          if (!IsHash(slot) || !ParseHash(value)) return false;
        }
      } else {
        return false;
      }
    }
  }
  return true;
}

bool ParamMatches(const ParamKind& kind, const Json& v, std::string* why) {
  switch (kind.kind) {
    case ParamKind::kQuantity: return ParseQuantity(v).has_value();
    case ParamKind::kAddress: return ParseAddress(v).has_value();
    case ParamKind::kDataBytes: return ParseData(v).has_value();
    case ParamKind::kBoolean: return v.is_boolean();
    case ParamKind::kBlockTag: return IsBlockTag(v);
    case ParamKind::kTransactionObject: return IsTransactionObject(v, why);
    case ParamKind::kStateOverride: return IsStateOverride(v);
    case ParamKind::kFloatArray: {
      if (!v.is_array()) return false;
      for (const auto& x : v) {
        if (!x.is_number()) return false;
      }
      return true;
    }
    case ParamKind::kTransactionHash: return ParseHash(v).has_value();
  }
  return false;
}

}  // namespace

std::string_view ScalarKindName(ScalarKind kind) {
  for (const auto& [n, v] : kScalarNames) {
    if (v == kind) return n;
  }
  return "Any";
}

const OutputNode::Field* OutputNode::FindField(std::string_view name) const {
  for (const auto& f : fields) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

OutputSchema ParseOutputNode(const Json& doc) {
  auto node = std::make_shared<OutputNode>();
  if (doc.is_string()) {
    node->shape = OutputNode::Shape::kScalar;
    node->scalar = Lookup(kScalarNames, doc.get<std::string>(), "scalar kind");
    return node;
  }
  if (!doc.is_object()) throw Error(Errc::kSchemaFormat, "output node must be a string or object");
  if (doc.contains("object")) {
    node->shape = OutputNode::Shape::kObject;
    const Json& fields = doc["object"];
    if (!fields.is_object()) throw Error(Errc::kSchemaFormat, "'object' must map names to nodes");
    for (const auto& [name, sub] : fields.items()) {
      node->fields.push_back({name, ParseOutputNode(sub), false});
    }
    if (doc.contains("optional")) {
      for (const auto& name : doc["optional"]) {
        bool found = false;
        for (auto& f : node->fields) {
          if (f.name == name) {
            f.optional = true;
            found = true;
          }
        }
        if (!found) throw Error(Errc::kSchemaFormat, "optional names an undeclared field");
      }
    }
  } else if (doc.contains("array")) {
    node->shape = OutputNode::Shape::kArray;
    node->items.push_back(ParseOutputNode(doc["array"]));
  } else if (doc.contains("nullable")) {
    node->shape = OutputNode::Shape::kNullable;
    node->items.push_back(ParseOutputNode(doc["nullable"]));
  } else if (doc.contains("oneOf")) {
    node->shape = OutputNode::Shape::kOneOf;
    if (!doc["oneOf"].is_array() || doc["oneOf"].empty()) {
      throw Error(Errc::kSchemaFormat, "'oneOf' needs a nonempty array");
    }
    for (const auto& alt : doc["oneOf"]) node->items.push_back(ParseOutputNode(alt));
  } else {
    throw Error(Errc::kSchemaFormat, "output node needs object, array, nullable or oneOf");
  }
  return node;
}

MethodSchema ParseMethodSchema(const Json& doc) {
  if (!doc.is_object() || !doc.contains("name") || !doc["name"].is_string()) {
    throw Error(Errc::kSchemaFormat, "schema needs a string 'name'");
  }
  for (const auto& [key, v] : doc.items()) {
    if (key != "name" && key != "params" && key != "output") {
      throw Error(Errc::kSchemaFormat, "unknown schema key '" + key + "'");
    }
  }
  MethodSchema s;
  s.name = doc["name"].get<std::string>();
  if (!doc.contains("output")) throw Error(Errc::kSchemaFormat, s.name + ": missing output");
  bool seen_optional = false;
  for (const auto& p : doc.value("params", Json::array())) {
    ParamSpec spec;
    if (!p.contains("name") || !p.contains("kind")) {
      throw Error(Errc::kSchemaFormat, s.name + ": param needs name and kind");
    }
    spec.name = p["name"].get<std::string>();
    spec.kind.kind = Lookup(kParamNames, p["kind"].get<std::string>(), "param kind");
    if (p.contains("role")) {
      if (spec.kind.kind != ParamKind::kQuantity) {
        throw Error(Errc::kSchemaFormat, s.name + ": role only applies to Quantity");
      }
      spec.kind.role = Lookup(kRoleNames, p["role"].get<std::string>(), "quantity role");
    }
    spec.optional = p.value("optional", false);
    if (seen_optional && !spec.optional) {
      throw Error(Errc::kSchemaFormat, s.name + ": required param after optional one");
    }
    seen_optional |= spec.optional;
    s.params.push_back(std::move(spec));
  }
  s.output = ParseOutputNode(doc["output"]);
  return s;
}

bool MatchesOutput(const OutputNode& node, const Json& value, Json* extras,
                   const std::string& pointer) {
  switch (node.shape) {
    case OutputNode::Shape::kScalar:
      return ScalarMatches(node.scalar, value);
    case OutputNode::Shape::kNullable:
      return value.is_null() || MatchesOutput(*node.items[0], value, extras, pointer);
    case OutputNode::Shape::kOneOf:
      for (const auto& alt : node.items) {
        if (MatchesOutput(*alt, value, nullptr, pointer)) {
          return MatchesOutput(*alt, value, extras, pointer);
        }
      }
      return false;
    case OutputNode::Shape::kArray: {
      if (!value.is_array()) return false;
      for (size_t i = 0; i < value.size(); ++i) {
        if (!MatchesOutput(*node.items[0], value[i], extras, pointer + "/" + std::to_string(i))) {
          return false;
        }
      }
      return true;
    }
    case OutputNode::Shape::kObject: {
      if (!value.is_object()) return false;
      for (const auto& f : node.fields) {
        if (!value.contains(f.name)) {
          if (f.optional) continue;
          return false;
        }
        if (!MatchesOutput(*f.node, value[f.name], extras, pointer + "/" + f.name)) return false;
      }
      for (const auto& [key, v] : value.items()) {
        if (node.FindField(key) == nullptr && extras != nullptr) {
          (*extras)[pointer.empty() ? "/" : pointer][key] = v;
        }
      }
      return true;
    }
  }
  return false;
}

bool ValidateParams(const MethodSchema& schema, const Json& params, std::string* why) {
  if (!params.is_array()) {
    if (why) *why = "params must be an array";
    return false;
  }
  size_t required = 0;
  for (const auto& p : schema.params) required += p.optional ? 0 : 1;
  if (params.size() < required || params.size() > schema.params.size()) {
    if (why) *why = "expected " + std::to_string(required) + ".." +
                    std::to_string(schema.params.size()) + " params";
    return false;
  }
  for (size_t i = 0; i < params.size(); ++i) {
    if (!ParamMatches(schema.params[i].kind, params[i], why)) {
      if (why && why->empty()) *why = "bad param '" + schema.params[i].name + "'";
      return false;
    }
  }
  return true;
}

const SchemaRegistry& SchemaRegistry::Builtin() {
  static const SchemaRegistry* registry = [] {
    auto* r = new SchemaRegistry();
    for (std::string_view doc : BuiltinSchemaDocuments()) {
      r->Add(ParseMethodSchema(Json::parse(doc)));
    }
    return r;
  }();
  return *registry;
}

void SchemaRegistry::Add(MethodSchema schema) {
  std::string name = schema.name;
  if (!schemas_.contains(name)) order_.push_back(name);
  schemas_[name] = std::move(schema);
}

void SchemaRegistry::LoadFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIo, "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  Json doc = Json::parse(buf.str(), nullptr, false);
  if (doc.is_discarded()) throw Error(Errc::kSchemaFormat, path + ": not JSON");
  Add(ParseMethodSchema(doc));
}

const MethodSchema* SchemaRegistry::Find(std::string_view method) const {
  auto it = schemas_.find(method);
  return it == schemas_.end() ? nullptr : &it->second;
}

const MethodSchema& SchemaRegistry::Get(std::string_view method) const {
  const MethodSchema* s = Find(method);
  if (s == nullptr) throw Error(Errc::kUnsupportedMethod, std::string(method));
  return *s;
}

}  // namespace ctxfuzz::rpc
