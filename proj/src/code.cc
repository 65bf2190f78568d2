#include "ctxfuzz/code.h"

#include "ctxfuzz/opcodes.h"

namespace ctxfuzz {

std::vector<Instruction> OpcodeSeq::Decode() const {
  std::vector<Instruction> out;
  size_t pc = 0;
  while (pc < bytes.size()) {
    Instruction ins;
    ins.pc = static_cast<uint32_t>(pc);
    ins.opcode = bytes[pc];
    int k = op::PushSize(ins.opcode);
    ins.immediate.assign(k, 0);
    for (int i = 0; i < k && pc + 1 + i < bytes.size(); ++i) ins.immediate[i] = bytes[pc + 1 + i];
    out.push_back(std::move(ins));
    pc += 1 + k;
  }
  return out;
}

OpcodeSeq OpcodeSeq::Encode(const std::vector<Instruction>& instructions) {
  OpcodeSeq seq;
  for (const Instruction& ins : instructions) {
    seq.bytes.push_back(ins.opcode);
    int k = op::PushSize(ins.opcode);
    for (int i = 0; i < k; ++i) {
      seq.bytes.push_back(i < static_cast<int>(ins.immediate.size()) ? ins.immediate[i] : 0);
    }
  }
  return seq;
}

std::set<uint8_t> ScanOpcodes(const OpcodeSeq& code) {
  std::set<uint8_t> out;
  for (size_t pc = 0; pc < code.bytes.size(); pc += 1 + op::PushSize(code.bytes[pc])) {
    out.insert(code.bytes[pc]);
  }
  return out;
}

std::vector<bool> JumpDestinations(const OpcodeSeq& code) {
  std::vector<bool> valid(code.bytes.size(), false);
  for (size_t pc = 0; pc < code.bytes.size(); pc += 1 + op::PushSize(code.bytes[pc])) {
    if (code.bytes[pc] == op::JUMPDEST) valid[pc] = true;
  }
  return valid;
}

Assembler& Assembler::Op(uint8_t opcode) {
  bytes_.push_back(opcode);
  return *this;
}

Assembler& Assembler::Push(uint64_t value) {
  int size = 1;
  while (size < 8 && (value >> (8 * size)) != 0) ++size;
  return PushN(size, value);
}

Assembler& Assembler::PushN(int size, uint64_t value) {
  bytes_.push_back(op::PushOpFor(size));
  for (int i = size - 1; i >= 0; --i) {
    bytes_.push_back(i < 8 ? static_cast<uint8_t>(value >> (8 * i)) : 0);
  }
  return *this;
}

Assembler& Assembler::PushBytes(const Bytes& immediate) {
  bytes_.push_back(op::PushOpFor(static_cast<int>(immediate.size())));
  bytes_.insert(bytes_.end(), immediate.begin(), immediate.end());
  return *this;
}

Assembler& Assembler::Append(const OpcodeSeq& other) {
  bytes_.insert(bytes_.end(), other.bytes.begin(), other.bytes.end());
  return *this;
}

}  // namespace ctxfuzz
