#include "ctxfuzz/error.h"

namespace ctxfuzz {

std::string_view ErrcName(Errc code) {
  switch (code) {
    case Errc::kBadHex: return "BadHex";
    case Errc::kInvalidContext: return "InvalidContext";
    case Errc::kDuplicateClientId: return "DuplicateClientId";
    case Errc::kZeroClients: return "ZeroClients";
    case Errc::kReferenceHasFaults: return "ReferenceHasFaults";
    case Errc::kNonceMismatch: return "NonceMismatch";
    case Errc::kInsufficientFunds: return "InsufficientFunds";
    case Errc::kFeeBelowBase: return "FeeBelowBase";
    case Errc::kIntrinsicGasTooLow: return "IntrinsicGasTooLow";
    case Errc::kUnknownBlock: return "UnknownBlock";
    case Errc::kStreamExhausted: return "StreamExhausted";
    case Errc::kSeedFormat: return "SeedFormat";
    case Errc::kEmptyTrace: return "EmptyTrace";
    case Errc::kContextUnavailable: return "ContextUnavailable";
    case Errc::kMissingCallee: return "MissingCallee";
    case Errc::kEmptyInitialState: return "EmptyInitialState";
    case Errc::kUnsupportedMethod: return "UnsupportedMethod";
    case Errc::kSchemaFormat: return "SchemaFormat";
    case Errc::kBadRequest: return "BadRequest";
    case Errc::kTooFewClients: return "TooFewClients";
    case Errc::kStoreIo: return "StoreIo";
    case Errc::kRulesFormat: return "RulesFormat";
    case Errc::kConfigInvalid: return "ConfigInvalid";
    case Errc::kSeedMismatch: return "SeedMismatch";
    case Errc::kIo: return "Io";
  }
  return "Unknown";
}

}  // namespace ctxfuzz
