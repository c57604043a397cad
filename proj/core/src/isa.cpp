#include "eg2c/isa.hpp"

#include <cstdio>
#include <fstream>

#include "eg2c/errors.hpp"

namespace eg2c {
namespace {

constexpr uint32_t kMax14 = 0x3FFF;
constexpr uint32_t kMax25 = 0x1FFFFFF;

void check(bool ok, const std::string& what) {
  if (!ok) throw RangeError("instruction field out of range: " + what);
}

}  // namespace

const char* addr_region_name(AddrRegion region) {
  switch (region) {
    case AddrRegion::WeightGB: return "weight_gb";
    case AddrRegion::IndexSram: return "index_sram";
    case AddrRegion::ActGbA: return "act_gb_a";
    case AddrRegion::ActGbB: return "act_gb_b";
    case AddrRegion::Output: return "output";
  }
  return "?";
}

uint32_t encode(const Instruction& instr) {
  uint32_t w = uint32_t(instr.op) << 28;
  switch (instr.op) {
    case Opcode::NOP:
    case Opcode::SWAP_GB:
    case Opcode::CMP_THRESH:
    case Opcode::HALT:
      return w;
    case Opcode::SET_LAYER:
      w |= uint32_t(instr.kind) << 26;
      w |= uint32_t(instr.precision == QuantMode::Int8 ? 1 : 0) << 25;
      w |= uint32_t(instr.sparsity ? 1 : 0) << 24;
      w |= uint32_t(instr.cir ? 1 : 0) << 23;
      w |= uint32_t(instr.drir ? 1 : 0) << 22;
      return w | instr.layer_id;
    case Opcode::SET_SHAPE_A:
      check(instr.cin <= kMax14, "cin");
      check(instr.cout <= kMax14, "cout");
      return w | uint32_t(instr.cin) << 14 | instr.cout;
    case Opcode::SET_SHAPE_B:
      check(instr.h <= kMax14, "h");
      check(instr.w <= kMax14, "w");
      return w | uint32_t(instr.h) << 14 | instr.w;
    case Opcode::SET_ADDR:
      check(uint32_t(instr.region) <= 4, "region");
      check(instr.addr <= kMax25, "addr");
      return w | uint32_t(instr.region) << 25 | instr.addr;
    case Opcode::RUN_LAYER:
      return w | instr.layer_id;
    case Opcode::SET_THRESH:
      return w | uint16_t(instr.threshold);
  }
  throw RangeError("unknown opcode");
}

Instruction decode(uint32_t word) {
  Instruction i;
  const uint32_t op = word >> 28;
  switch (op) {
    case 0x0: i.op = Opcode::NOP; break;
    case 0x1:
      i.op = Opcode::SET_LAYER;
      i.kind = LayerKind((word >> 26) & 0x3);
      i.precision = (word >> 25) & 1 ? QuantMode::Int8 : QuantMode::Po2_4bit;
      i.sparsity = (word >> 24) & 1;
      i.cir = (word >> 23) & 1;
      i.drir = (word >> 22) & 1;
      i.layer_id = uint8_t(word & 0xFF);
      break;
    case 0x2:
      i.op = Opcode::SET_SHAPE_A;
      i.cin = uint16_t((word >> 14) & kMax14);
      i.cout = uint16_t(word & kMax14);
      break;
    case 0x3:
      i.op = Opcode::SET_SHAPE_B;
      i.h = uint16_t((word >> 14) & kMax14);
      i.w = uint16_t(word & kMax14);
      break;
    case 0x4: {
      i.op = Opcode::SET_ADDR;
      const uint32_t region = (word >> 25) & 0x7;
      if (region > 4)
        throw Fault(0, FaultCause::DecodeError,
                    "SET_ADDR region " + std::to_string(region));
      i.region = AddrRegion(region);
      i.addr = word & kMax25;
      break;
    }
    case 0x5:
      i.op = Opcode::RUN_LAYER;
      i.layer_id = uint8_t(word & 0xFF);
      break;
    case 0x6: i.op = Opcode::SWAP_GB; break;
    case 0x7: i.op = Opcode::CMP_THRESH; break;
    case 0x8:
      i.op = Opcode::SET_THRESH;
      i.threshold = int16_t(word & 0xFFFF);
      break;
    case 0xF: i.op = Opcode::HALT; break;
    default:
      throw Fault(0, FaultCause::DecodeError,
                  "opcode 0x" + std::to_string(op));
  }
  return i;
}

std::string disassemble_word(uint32_t word) {
  char buf[80];
  Instruction i;
  try {
    i = decode(word);
  } catch (const Fault&) {
    std::snprintf(buf, sizeof buf, ".word 0x%08X", word);
    return buf;
  }
  switch (i.op) {
    case Opcode::NOP: return "NOP";
    case Opcode::SET_LAYER:
      std::snprintf(buf, sizeof buf,
                    "SET_LAYER id=%u kind=%s precision=%s sparsity=%d cir=%d drir=%d",
                    i.layer_id, layer_kind_name(i.kind),
                    i.precision == QuantMode::Int8 ? "int8" : "po2",
                    i.sparsity ? 1 : 0, i.cir ? 1 : 0, i.drir ? 1 : 0);
      return buf;
    case Opcode::SET_SHAPE_A:
      std::snprintf(buf, sizeof buf, "SET_SHAPE_A Cin=%u Cout=%u", i.cin, i.cout);
      return buf;
    case Opcode::SET_SHAPE_B:
      std::snprintf(buf, sizeof buf, "SET_SHAPE_B H=%u W=%u", i.h, i.w);
      return buf;
    case Opcode::SET_ADDR:
      std::snprintf(buf, sizeof buf, "SET_ADDR region=%s addr=0x%X",
                    addr_region_name(i.region), i.addr);
      return buf;
    case Opcode::RUN_LAYER:
      std::snprintf(buf, sizeof buf, "RUN_LAYER id=%u", i.layer_id);
      return buf;
    case Opcode::SWAP_GB: return "SWAP_GB";
    case Opcode::CMP_THRESH: return "CMP_THRESH";
    case Opcode::SET_THRESH:
      std::snprintf(buf, sizeof buf, "SET_THRESH value=%d", i.threshold);
      return buf;
    case Opcode::HALT: return "HALT";
  }
  std::snprintf(buf, sizeof buf, ".word 0x%08X", word);
  return buf;
}

std::string disassemble(const std::vector<uint32_t>& words) {
  std::string out;
  for (uint32_t w : words) {
    out += disassemble_word(w);
    out += '\n';
  }
  return out;
}

void save_program(const std::string& path, const Program& program) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path);
  f.write("EG2P", 4);
  auto put32 = [&f](uint32_t v) {
    unsigned char b[4] = {uint8_t(v), uint8_t(v >> 8), uint8_t(v >> 16),
                          uint8_t(v >> 24)};
    f.write(reinterpret_cast<char*>(b), 4);
  };
  put32(uint32_t(program.words.size()));
  for (uint32_t w : program.words) put32(w);
  if (!f) throw IoError("write failed: " + path);
}

std::vector<uint32_t> load_program(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::string(magic, 4) != "EG2P")
    throw IoError("not a program file: " + path);
  auto get32 = [&f]() {
    unsigned char b[4];
    f.read(reinterpret_cast<char*>(b), 4);
    return uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 |
           uint32_t(b[3]) << 24;
  };
  const uint32_t count = get32();
  std::vector<uint32_t> words;
  words.reserve(count);
  for (uint32_t k = 0; k < count; ++k) words.push_back(get32());
  if (!f) throw IoError("truncated program file: " + path);
  return words;
}

std::vector<uint32_t> with_threshold(const std::vector<uint32_t>& words,
                                     int16_t value) {
  Instruction set;
  set.op = Opcode::SET_THRESH;
  set.threshold = value;
  std::vector<uint32_t> out;
  out.reserve(words.size() + 1);
  out.push_back(encode(set));
  out.insert(out.end(), words.begin(), words.end());
  return out;
}

}  // namespace eg2c
