#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <vector>

#include <doctest.h>

#include "eg2c/assembler.hpp"
#include "eg2c/errors.hpp"
#include "eg2c/isa.hpp"
#include "eg2c/memory.hpp"
#include "eg2c/reference_models.hpp"

using namespace eg2c;

TEST_CASE("fixed words decode to fixed listings") {
  CHECK(disassemble_word(0xF0000000u) == "HALT");
  CHECK(disassemble_word(0x00000000u) == "NOP");

  Instruction i;
  i.op = Opcode::SET_SHAPE_A;
  i.cin = 3;
  i.cout = 16;
  const uint32_t word = encode(i);
  CHECK(word == ((0x2u << 28) | (3u << 14) | 16u));
  CHECK(disassemble_word(word) == "SET_SHAPE_A Cin=3 Cout=16");
}

TEST_CASE("encode/decode is the identity on legal fields") {
  std::mt19937 rng(31);
  auto u = [&rng](uint32_t hi) { return uint32_t(rng() % (hi + 1)); };

  for (int rep = 0; rep < 500; ++rep) {
    Instruction i;
    switch (rep % 9) {
      case 0: i.op = Opcode::NOP; break;
      case 1:
        i.op = Opcode::SET_LAYER;
        i.kind = LayerKind(u(3));
        i.precision = u(1) ? QuantMode::Int8 : QuantMode::Po2_4bit;
        i.sparsity = u(1);
        i.cir = u(1);
        i.drir = u(1);
        i.layer_id = uint8_t(u(255));
        break;
      case 2:
        i.op = Opcode::SET_SHAPE_A;
        i.cin = uint16_t(u(0x3FFF));
        i.cout = uint16_t(u(0x3FFF));
        break;
      case 3:
        i.op = Opcode::SET_SHAPE_B;
        i.h = uint16_t(u(0x3FFF));
        i.w = uint16_t(u(0x3FFF));
        break;
      case 4:
        i.op = Opcode::SET_ADDR;
        i.region = AddrRegion(u(4));
        i.addr = u(0x1FFFFFF);
        break;
      case 5:
        i.op = Opcode::RUN_LAYER;
        i.layer_id = uint8_t(u(255));
        break;
      case 6: i.op = Opcode::SWAP_GB; break;
      case 7:
        i.op = Opcode::SET_THRESH;
        i.threshold = int16_t(u(0xFFFF));
        break;
      case 8: i.op = Opcode::CMP_THRESH; break;
    }
    CHECK(decode(encode(i)) == i);
  }
  Instruction halt;
  halt.op = Opcode::HALT;
  CHECK(decode(encode(halt)) == halt);
}

TEST_CASE("oversized fields refuse to encode") {
  Instruction i;
  i.op = Opcode::SET_SHAPE_A;
  i.cin = 1 << 14;
  CHECK_THROWS_AS(encode(i), RangeError);

  Instruction a;
  a.op = Opcode::SET_ADDR;
  a.region = AddrRegion(5);
  CHECK_THROWS_AS(encode(a), RangeError);
  a.region = AddrRegion::WeightGB;
  a.addr = 1u << 25;
  CHECK_THROWS_AS(encode(a), RangeError);
}

TEST_CASE("unknown opcodes fault on decode but still list") {
  CHECK_THROWS_AS(decode(0x90000000u), Fault);
  CHECK_THROWS_AS(decode((0x4u << 28) | (5u << 25)), Fault);  // bad region
  CHECK(disassemble_word(0x9ABCDEF0u) == ".word 0x9ABCDEF0");
}

TEST_CASE("a one-layer detector compiles to the canonical sequence") {
  ModelSpec m;
  m.role = ModelRole::Detector;
  LayerSpec fc;
  fc.kind = LayerKind::FC;
  fc.cin = 8;
  fc.cout = 1;
  fc.h = fc.w = 1;
  fc.act = Activation::Identity;
  fc.outbits = 16;
  m.layers.push_back(fc);
  ModelWeights w{LayerWeights{std::vector<uint8_t>(8, 1)}};

  const AssembledProgram ap = assemble(m, w, EngineConfig{}, MemoryConfig{});
  const std::vector<Opcode> want = {
      Opcode::SET_LAYER, Opcode::SET_SHAPE_A, Opcode::SET_SHAPE_B,
      Opcode::SET_ADDR,  Opcode::SET_ADDR,    Opcode::SET_ADDR,
      Opcode::RUN_LAYER, Opcode::CMP_THRESH,  Opcode::HALT};
  REQUIRE(ap.program.words.size() == want.size());
  for (size_t k = 0; k < want.size(); ++k)
    CHECK(decode(ap.program.words[k]).op == want[k]);
  CHECK(ap.program.role == ModelRole::Detector);
  CHECK(ap.program.layer_count == 1);
  REQUIRE(ap.placement.size() == 1);
  CHECK(ap.placement[0].weight_bytes == 8);
  CHECK_FALSE(ap.placement[0].sparse);

  SUBCASE("assembly is deterministic") {
    const AssembledProgram again = assemble(m, w, EngineConfig{}, MemoryConfig{});
    CHECK(again.program.words == ap.program.words);
  }
}

TEST_CASE("converters end in a plain HALT with buffer swaps between layers") {
  const ReferenceSuite suite = build_reference_models();
  AssembleOptions opts;
  opts.flags.cir = opts.flags.drir = true;
  const AssembledProgram ap = assemble(suite.coarse.spec, suite.coarse.weights,
                                       EngineConfig{}, MemoryConfig{}, opts);
  const auto& words = ap.program.words;
  const size_t layers = suite.coarse.spec.layers.size();
  REQUIRE(words.size() == 7 * layers + (layers - 1) + 1);
  CHECK(decode(words.back()).op == Opcode::HALT);
  size_t swaps = 0, cmps = 0;
  for (uint32_t word : words) {
    const Opcode op = decode(word).op;
    swaps += op == Opcode::SWAP_GB;
    cmps += op == Opcode::CMP_THRESH;
  }
  CHECK(swaps == layers - 1);
  CHECK(cmps == 0);
}

TEST_CASE("empty models do not assemble") {
  CHECK_THROWS_AS(assemble(ModelSpec{}, ModelWeights{}, EngineConfig{},
                           MemoryConfig{}),
                  Error);
}

TEST_CASE("threshold prepending leaves the body untouched") {
  const std::vector<uint32_t> body = {0x00000000u, 0xF0000000u};
  const std::vector<uint32_t> out = with_threshold(body, -7);
  REQUIRE(out.size() == 3);
  const Instruction first = decode(out[0]);
  CHECK(first.op == Opcode::SET_THRESH);
  CHECK(first.threshold == -7);
  CHECK(out[1] == body[0]);
  CHECK(out[2] == body[1]);
}

TEST_CASE("program files round-trip and reject corruption") {
  std::mt19937 rng(77);
  Program p;
  p.words = {encode(Instruction{})};
  for (int k = 0; k < 40; ++k) p.words.push_back(rng());
  // ensure words are arbitrary bytes, not necessarily decodable
  char path[] = "/tmp/eg2c_prog_XXXXXX";
  REQUIRE(mkstemp(path) != -1);
  save_program(path, p);
  CHECK(load_program(path) == p.words);

  SUBCASE("bad magic") {
    std::ofstream f(path, std::ios::binary);
    f << "nope, not a program";
    f.close();
    CHECK_THROWS_AS(load_program(path), IoError);
  }
  SUBCASE("truncated body") {
    std::ofstream f(path, std::ios::binary);
    f << "EG2P";
    const uint32_t claim = 100;
    f.write(reinterpret_cast<const char*>(&claim), 4);
    f.write("\1\2\3", 3);
    f.close();
    CHECK_THROWS_AS(load_program(path), IoError);
  }
  std::remove(path);
}
