#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eg2c/model.hpp"

namespace eg2c {

// 32-bit instruction word; opcode in bits [31:28].
enum class Opcode : uint8_t {
  NOP = 0x0,
  SET_LAYER = 0x1,
  SET_SHAPE_A = 0x2,
  SET_SHAPE_B = 0x3,
  SET_ADDR = 0x4,
  RUN_LAYER = 0x5,
  SWAP_GB = 0x6,
  CMP_THRESH = 0x7,
  SET_THRESH = 0x8,
  HALT = 0xF,
};

// SET_ADDR target region, bits [27:25].
enum class AddrRegion : uint8_t {
  WeightGB = 0,
  IndexSram = 1,
  ActGbA = 2,
  ActGbB = 3,
  Output = 4,  // current output-role global buffer
};

const char* addr_region_name(AddrRegion region);

// Decoded instruction. Field layout:
//   SET_LAYER   kind[27:26] precision[25] sparsity[24] cir[23] drir[22] id[7:0]
//   SET_SHAPE_A cin[27:14] cout[13:0]
//   SET_SHAPE_B h[27:14] w[13:0]
//   SET_ADDR    region[27:25] addr[24:0]
//   RUN_LAYER   id[7:0]
//   SET_THRESH  threshold[15:0] (signed)
struct Instruction {
  Opcode op = Opcode::NOP;
  LayerKind kind = LayerKind::ConvNormal;
  QuantMode precision = QuantMode::Po2_4bit;
  bool sparsity = false;
  bool cir = false;
  bool drir = false;
  uint8_t layer_id = 0;
  uint16_t cin = 0, cout = 0, h = 0, w = 0;
  AddrRegion region = AddrRegion::WeightGB;
  uint32_t addr = 0;
  int16_t threshold = 0;

  bool operator==(const Instruction&) const = default;
};

// Field values are range-checked; RangeError instead of truncation
// (cin/cout/h/w must fit 14 bits, addr 25 bits, region 0..4).
uint32_t encode(const Instruction& instr);

// Throws Fault(DecodeError) for an opcode outside the table.
Instruction decode(uint32_t word);

// Single-word listing; unknown opcodes render as ".word 0x????????",
// so disassembly never fails.
std::string disassemble_word(uint32_t word);

struct Program {
  std::vector<uint32_t> words;
  ModelRole role = ModelRole::Detector;
  int layer_count = 0;
};

// Full listing, one line per word.
std::string disassemble(const std::vector<uint32_t>& words);

// Program container: magic "EG2P", u32 word count, u32 words, little-endian.
void save_program(const std::string& path, const Program& program);
std::vector<uint32_t> load_program(const std::string& path);

// Returns a copy with SET_THRESH(value) prepended, used to hand the
// adaptive threshold to a detector program at dispatch time.
std::vector<uint32_t> with_threshold(const std::vector<uint32_t>& words,
                                     int16_t value);

}  // namespace eg2c
