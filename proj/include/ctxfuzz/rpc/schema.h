#pragma once

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "ctxfuzz/rpc/types.h"

namespace ctxfuzz::rpc {

enum class QuantityRole { kGas, kFee, kValue, kIndex, kGeneric };

struct ParamKind {
  enum Kind {
    kQuantity,
    kAddress,
    kDataBytes,
    kBoolean,
    kBlockTag,
    kTransactionObject,
    kStateOverride,
    kFloatArray,
    kTransactionHash,
  };
  Kind kind = kQuantity;
  QuantityRole role = QuantityRole::kGeneric;  // only for kQuantity

  friend bool operator==(const ParamKind&, const ParamKind&) = default;
};

enum class ScalarKind { kQuantity, kInteger, kFloat, kBool, kData, kAddress, kHash, kString, kAny };

std::string_view ScalarKindName(ScalarKind kind);

struct OutputNode {
  enum class Shape { kScalar, kObject, kArray, kNullable, kOneOf };

  struct Field {
    std::string name;
    std::shared_ptr<const OutputNode> node;
    bool optional = false;
  };

  Shape shape = Shape::kScalar;
  ScalarKind scalar = ScalarKind::kAny;
  std::vector<Field> fields;                              // kObject, in declared order
  std::vector<std::shared_ptr<const OutputNode>> items;   // element / inner / alternatives

  const Field* FindField(std::string_view name) const;
};

using OutputSchema = std::shared_ptr<const OutputNode>;

struct ParamSpec {
  std::string name;
  ParamKind kind;
  bool optional = false;
};

struct MethodSchema {
  std::string name;
  std::vector<ParamSpec> params;
  OutputSchema output;
};

// Schema documents are JSON (see ANNOTATION.md). Throws Error(kSchemaFormat).
MethodSchema ParseMethodSchema(const Json& doc);
OutputSchema ParseOutputNode(const Json& doc);

// True when `value` has the shape `node` describes. Unknown object members are
// allowed and reported through `extras` (pointer of the object -> members).
bool MatchesOutput(const OutputNode& node, const Json& value, Json* extras = nullptr,
                   const std::string& pointer = "");

// Arity and kind check of a params array against the schema.
bool ValidateParams(const MethodSchema& schema, const Json& params, std::string* why = nullptr);

class SchemaRegistry {
 public:
  // Registry holding every schema compiled into the library.
  static const SchemaRegistry& Builtin();

  void Add(MethodSchema schema);
  // Loads one schema document from disk. Throws Error(kSchemaFormat, kIo).
  void LoadFile(const std::string& path);

  const MethodSchema* Find(std::string_view method) const;
  // Throws Error(kUnsupportedMethod).
  const MethodSchema& Get(std::string_view method) const;
  // Method names in registration order.
  const std::vector<std::string>& methods() const { return order_; }

 private:
  std::map<std::string, MethodSchema, std::less<>> schemas_;
  std::vector<std::string> order_;
};

}  // namespace ctxfuzz::rpc
