#include "ctxfuzz/rpc/wire.h"

#include "ctxfuzz/error.h"

namespace ctxfuzz::rpc {

std::string AssembleRequest(const RpcCall& call) {
  Json j = Json::object();
  j["jsonrpc"] = "2.0";
  j["id"] = call.id;
  j["method"] = call.method;
  j["params"] = call.params;
  return j.dump();
}

RpcCall ParseRequest(std::string_view bytes) {
  Json j = Json::parse(bytes, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(Errc::kBadRequest, "not a JSON object");
  if (j.value("jsonrpc", "") != "2.0") throw Error(Errc::kBadRequest, "jsonrpc must be \"2.0\"");
  if (!j.contains("id") || !j["id"].is_number_unsigned()) {
    throw Error(Errc::kBadRequest, "id must be a non-negative integer");
  }
  if (!j.contains("method") || !j["method"].is_string()) {
    throw Error(Errc::kBadRequest, "method must be a string");
  }
  RpcCall call;
  call.id = j["id"].get<uint64_t>();
  call.method = j["method"].get<std::string>();
  call.params = j.value("params", Json::array());
  if (!call.params.is_array()) throw Error(Errc::kBadRequest, "params must be an array");
  return call;
}

std::string SerializeResponse(uint64_t id, const RpcResponse& response) {
  Json j = Json::object();
  j["jsonrpc"] = "2.0";
  j["id"] = id;
  if (response.error) {
    j["error"] = Json::object();
    j["error"]["code"] = response.error->code;
    j["error"]["message"] = response.error->message;
  } else {
    j["result"] = response.result.value_or(Json());
  }
  return j.dump();
}

RpcResponse ParseResponse(const OutputSchema& schema, std::string_view bytes) {
  Json j = Json::parse(bytes, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    return RpcResponse::Fail(code::kParseError, "malformed response");
  }
  if (j.contains("error")) {
    const Json& e = j["error"];
    if (!e.is_object() || !e.contains("code") || !e["code"].is_number_integer()) {
      return RpcResponse::Fail(code::kInternal, "schema violation: malformed error object");
    }
    return RpcResponse::Fail(e["code"].get<int64_t>(), e.value("message", ""));
  }
  if (!j.contains("result")) {
    return RpcResponse::Fail(code::kInternal, "schema violation: neither result nor error");
  }
  RpcResponse r;
  if (!MatchesOutput(*schema, j["result"], &r.extras)) {
    return RpcResponse::Fail(code::kInternal, "schema violation: result does not match schema");
  }
  r.result = j["result"];
  return r;
}

}  // namespace ctxfuzz::rpc
