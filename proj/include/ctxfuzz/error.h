#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ctxfuzz {

// Every recoverable failure surfaced by the library carries one of these.
enum class Errc {
  kBadHex,
  kInvalidContext,
  // chain
  kDuplicateClientId,
  kZeroClients,
  kReferenceHasFaults,
  kNonceMismatch,
  kInsufficientFunds,
  kFeeBelowBase,
  kIntrinsicGasTooLow,
  kUnknownBlock,
  // corpus
  kStreamExhausted,
  kSeedFormat,
  // reform
  kEmptyTrace,
  kContextUnavailable,
  // mutate
  kMissingCallee,
  kEmptyInitialState,
  // rpc
  kUnsupportedMethod,
  kSchemaFormat,
  kBadRequest,
  // oracle
  kTooFewClients,
  kStoreIo,
  kRulesFormat,
  // cli
  kConfigInvalid,
  kSeedMismatch,
  kIo,
};

std::string_view ErrcName(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(ErrcName(code)) + ": " + what),
        code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

}  // namespace ctxfuzz
