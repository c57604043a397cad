#pragma once

#include <cstdint>
#include <vector>

#include "eg2c/dataflow.hpp"
#include "eg2c/isa.hpp"
#include "eg2c/memory.hpp"
#include "eg2c/model.hpp"

namespace eg2c {

// Where one layer's weight and index streams live inside the global
// buffers. Offsets are decided at assembly time and encoded as SET_ADDR
// operands, so a program plus its model fully determine a preload image.
struct LayerPlacement {
  uint32_t weight_off = 0;
  uint32_t weight_bytes = 0;
  uint32_t index_off = 0;
  uint32_t index_bytes = 0;
  bool sparse = false;
};

struct AssembledProgram {
  Program program;
  std::vector<LayerPlacement> placement;  // one per layer
  uint32_t weight_end = 0;                // first free weight GB byte
  uint32_t index_end = 0;
};

struct AssembleOptions {
  DataflowFlags flags;
  // Base offsets let several models share the weight GB / index SRAM;
  // the orchestrator assembles its three programs with stacked bases.
  uint32_t weight_base = 0;
  uint32_t index_base = 0;
};

// Compile a model to an instruction stream:
//   per layer: SET_LAYER, SET_SHAPE_A, SET_SHAPE_B, SET_ADDR x3
//   (weight GB, index SRAM, output base), RUN_LAYER, then SWAP_GB between
//   layers; detector programs end CMP_THRESH, HALT, converters end HALT.
//
// Checks capacities (weights, indices, activations, program length, and
// the worst-case staged bytes of any wave against in_act_buf) and throws
// CapacityExceeded / RangeError instead of emitting a bad program.
AssembledProgram assemble(const ModelSpec& model, const ModelWeights& weights,
                          const EngineConfig& engine, const MemoryConfig& mem,
                          const AssembleOptions& opts = {});

}  // namespace eg2c
