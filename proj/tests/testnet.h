#pragma once

#include <string>
#include <vector>

#include "ctxfuzz/chain.h"

namespace ctxfuzz::testing {

// 0x1000...00NN with NN = i + 1.
inline Address FundedAddress(int i) {
  Address a;
  a.bytes[0] = 0x10;
  a.bytes[19] = static_cast<uint8_t>(i + 1);
  return a;
}

inline NetworkConfig TestConfig(int funded = 4, const std::vector<std::string>& clients = {"ref"}) {
  NetworkConfig cfg;
  for (const std::string& c : clients) cfg.clients.push_back(ParseClientSpec(c));
  for (int i = 0; i < funded; ++i) cfg.accounts[FundedAddress(i)] = Word::FromHex("0xd3c21bcecceda1000000");
  return cfg;
}

}  // namespace ctxfuzz::testing
