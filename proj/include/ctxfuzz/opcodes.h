#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ctxfuzz::op {

inline constexpr uint8_t STOP = 0x00;
inline constexpr uint8_t ADD = 0x01;
inline constexpr uint8_t MUL = 0x02;
inline constexpr uint8_t SUB = 0x03;
inline constexpr uint8_t DIV = 0x04;
inline constexpr uint8_t MOD = 0x06;
inline constexpr uint8_t LT = 0x10;
inline constexpr uint8_t GT = 0x11;
inline constexpr uint8_t EQ = 0x14;
inline constexpr uint8_t ISZERO = 0x15;
inline constexpr uint8_t AND = 0x16;
inline constexpr uint8_t OR = 0x17;
inline constexpr uint8_t XOR = 0x18;
inline constexpr uint8_t NOT = 0x19;
inline constexpr uint8_t KECCAK256 = 0x20;
inline constexpr uint8_t ADDRESS = 0x30;
inline constexpr uint8_t BALANCE = 0x31;
inline constexpr uint8_t CALLER = 0x33;
inline constexpr uint8_t CALLVALUE = 0x34;
inline constexpr uint8_t CALLDATALOAD = 0x35;
inline constexpr uint8_t CALLDATASIZE = 0x36;
inline constexpr uint8_t TIMESTAMP = 0x42;
inline constexpr uint8_t NUMBER = 0x43;
inline constexpr uint8_t GASLIMIT = 0x45;
inline constexpr uint8_t BASEFEE = 0x48;
inline constexpr uint8_t POP = 0x50;
inline constexpr uint8_t MLOAD = 0x51;
inline constexpr uint8_t MSTORE = 0x52;
inline constexpr uint8_t SLOAD = 0x54;
inline constexpr uint8_t SSTORE = 0x55;
inline constexpr uint8_t JUMP = 0x56;
inline constexpr uint8_t JUMPI = 0x57;
inline constexpr uint8_t PC = 0x58;
inline constexpr uint8_t MSIZE = 0x59;
inline constexpr uint8_t GAS = 0x5a;
inline constexpr uint8_t JUMPDEST = 0x5b;
inline constexpr uint8_t TLOAD = 0x5c;
inline constexpr uint8_t TSTORE = 0x5d;
inline constexpr uint8_t PUSH0 = 0x5f;
inline constexpr uint8_t PUSH1 = 0x60;
inline constexpr uint8_t PUSH2 = 0x61;
inline constexpr uint8_t PUSH32 = 0x7f;
inline constexpr uint8_t DUP1 = 0x80;
inline constexpr uint8_t DUP16 = 0x8f;
inline constexpr uint8_t SWAP1 = 0x90;
inline constexpr uint8_t SWAP16 = 0x9f;
inline constexpr uint8_t CALL = 0xf1;
inline constexpr uint8_t RETURN = 0xf3;
inline constexpr uint8_t REVERT = 0xfd;
inline constexpr uint8_t INVALID = 0xfe;

struct Info {
  std::string_view name;  // empty for bytes outside the interpreter's set
  uint8_t inputs = 0;
  uint8_t outputs = 0;
  uint8_t immediate = 0;  // PUSHk operand length
  bool supported = false;
};

const Info& GetInfo(uint8_t opcode);

inline bool IsPush(uint8_t opcode) { return opcode >= PUSH0 && opcode <= PUSH32; }
inline int PushSize(uint8_t opcode) { return IsPush(opcode) ? opcode - PUSH0 : 0; }
inline uint8_t PushOpFor(int size) { return static_cast<uint8_t>(PUSH0 + size); }
inline bool IsDup(uint8_t opcode) { return opcode >= DUP1 && opcode <= DUP16; }
inline bool IsSwap(uint8_t opcode) { return opcode >= SWAP1 && opcode <= SWAP16; }

// Mnemonic for supported opcodes, "0x.." for anything else.
std::string Mnemonic(uint8_t opcode);
std::optional<uint8_t> FromMnemonic(std::string_view name);

// All bytes the interpreter implements, ascending.
const std::vector<uint8_t>& SupportedOpcodes();

}  // namespace ctxfuzz::op
