#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ctxfuzz/bytes.h"

namespace ctxfuzz {

struct Instruction {
  uint32_t pc = 0;
  uint8_t opcode = 0;
  Bytes immediate;  // exactly PushSize(opcode) bytes after decoding

  friend bool operator==(const Instruction&, const Instruction&) = default;
};

// Raw contract code. PUSHk opcodes are followed by k immediate bytes; an
// immediate cut short by the end of the code decodes as zero-padded.
struct OpcodeSeq {
  Bytes bytes;

  static OpcodeSeq FromHex(std::string_view hex) { return {ctxfuzz::FromHex(hex)}; }
  static OpcodeSeq Encode(const std::vector<Instruction>& instructions);

  std::vector<Instruction> Decode() const;
  std::string Hex() const { return ToHex(bytes); }
  bool empty() const { return bytes.empty(); }
  size_t size() const { return bytes.size(); }

  friend bool operator==(const OpcodeSeq&, const OpcodeSeq&) = default;
};

// Bytes of `code` that are real opcodes (not PUSH data), ascending.
std::set<uint8_t> ScanOpcodes(const OpcodeSeq& code);

// valid[i] is true when byte i is a JUMPDEST opcode rather than PUSH data.
std::vector<bool> JumpDestinations(const OpcodeSeq& code);

// Small assembler used by tests, the seed generator and the mutators.
class Assembler {
 public:
  Assembler& Op(uint8_t opcode);
  // Smallest PUSH able to hold `value` (PUSH1 for zero).
  Assembler& Push(uint64_t value);
  Assembler& PushN(int size, uint64_t value);
  Assembler& PushBytes(const Bytes& immediate);
  Assembler& Append(const OpcodeSeq& other);
  size_t size() const { return bytes_.size(); }
  OpcodeSeq Build() const { return {bytes_}; }

 private:
  Bytes bytes_;
};

}  // namespace ctxfuzz
