#include "ctxfuzz/opcodes.h"

#include <array>
#include <cstdio>

namespace ctxfuzz::op {
namespace {

struct Table {
  std::array<Info, 256> info{};
  std::array<std::string, 256> names;

  void Set(uint8_t code, std::string_view name, uint8_t in, uint8_t out, uint8_t imm = 0) {
    names[code] = std::string(name);
    info[code] = Info{names[code], in, out, imm, true};
  }

  Table() {
    Set(STOP, "STOP", 0, 0);
    Set(ADD, "ADD", 2, 1);
    Set(MUL, "MUL", 2, 1);
    Set(SUB, "SUB", 2, 1);
    Set(DIV, "DIV", 2, 1);
    Set(MOD, "MOD", 2, 1);
    Set(LT, "LT", 2, 1);
    Set(GT, "GT", 2, 1);
    Set(EQ, "EQ", 2, 1);
    Set(ISZERO, "ISZERO", 1, 1);
    Set(AND, "AND", 2, 1);
    Set(OR, "OR", 2, 1);
    Set(XOR, "XOR", 2, 1);
    Set(NOT, "NOT", 1, 1);
    Set(KECCAK256, "KECCAK256", 2, 1);
    Set(ADDRESS, "ADDRESS", 0, 1);
    Set(BALANCE, "BALANCE", 1, 1);
    Set(CALLER, "CALLER", 0, 1);
    Set(CALLVALUE, "CALLVALUE", 0, 1);
    Set(CALLDATALOAD, "CALLDATALOAD", 1, 1);
    Set(CALLDATASIZE, "CALLDATASIZE", 0, 1);
    Set(TIMESTAMP, "TIMESTAMP", 0, 1);
    Set(NUMBER, "NUMBER", 0, 1);
    Set(GASLIMIT, "GASLIMIT", 0, 1);
    Set(BASEFEE, "BASEFEE", 0, 1);
    Set(POP, "POP", 1, 0);
    Set(MLOAD, "MLOAD", 1, 1);
    Set(MSTORE, "MSTORE", 2, 0);
    Set(SLOAD, "SLOAD", 1, 1);
    Set(SSTORE, "SSTORE", 2, 0);
    Set(JUMP, "JUMP", 1, 0);
    Set(JUMPI, "JUMPI", 2, 0);
    Set(PC, "PC", 0, 1);
    Set(MSIZE, "MSIZE", 0, 1);
    Set(GAS, "GAS", 0, 1);
    Set(JUMPDEST, "JUMPDEST", 0, 0);
    Set(TLOAD, "TLOAD", 1, 1);
    Set(TSTORE, "TSTORE", 2, 0);
    for (int k = 0; k <= 32; ++k) {
      Set(static_cast<uint8_t>(PUSH0 + k), "PUSH" + std::to_string(k), 0, 1,
          static_cast<uint8_t>(k));
    }
    for (int n = 1; n <= 16; ++n) {
      Set(static_cast<uint8_t>(DUP1 + n - 1), "DUP" + std::to_string(n), n, n + 1);
      Set(static_cast<uint8_t>(SWAP1 + n - 1), "SWAP" + std::to_string(n), n + 1, n + 1);
    }
    Set(CALL, "CALL", 7, 1);
    Set(RETURN, "RETURN", 2, 0);
    Set(REVERT, "REVERT", 2, 0);
    Set(INVALID, "INVALID", 0, 0);
  }
};

const Table& GetTable() {
  static const Table table;
  return table;
}

}  // namespace

const Info& GetInfo(uint8_t opcode) { return GetTable().info[opcode]; }

std::string Mnemonic(uint8_t opcode) {
  const Info& info = GetInfo(opcode);
  if (info.supported) return std::string(info.name);
  char buf[8];
  std::snprintf(buf, sizeof(buf), "0x%02x", opcode);
  return buf;
}

std::optional<uint8_t> FromMnemonic(std::string_view name) {
  for (int i = 0; i < 256; ++i) {
    const Info& info = GetInfo(static_cast<uint8_t>(i));
    if (info.supported && info.name == name) return static_cast<uint8_t>(i);
  }
  return std::nullopt;
}

const std::vector<uint8_t>& SupportedOpcodes() {
  static const std::vector<uint8_t> all = [] {
    std::vector<uint8_t> v;
    for (int i = 0; i < 256; ++i) {
      if (GetInfo(static_cast<uint8_t>(i)).supported) v.push_back(static_cast<uint8_t>(i));
    }
    return v;
  }();
  return all;
}

}  // namespace ctxfuzz::op
