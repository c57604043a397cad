#pragma once

#include <cstdint>
#include <vector>

#include "eg2c/model.hpp"
#include "eg2c/sparse.hpp"

namespace eg2c {

// MAC array geometry and per-lane throughput.
struct EngineConfig {
  int lanes = 32;
  int macs_per_lane_per_cycle = 1;  // P; waves shrink as ceil(work / P)
  int drir_sub_row_len = 4;         // output sub-row length under D-RIR
  uint64_t clock_hz = 2'000'000;
};

// Waves may not read more input bytes than the staging buffer holds, so
// the packer closes a wave early once its distinct (channel, row) set
// would outgrow this. Matches MemoryConfig::in_act_buf.
inline constexpr uint64_t kDefaultStagingLimit = 2048;

// Dataflow feature toggles of one layer execution.
struct DataflowFlags {
  bool sparsity = true;
  bool cir = false;   // kernel-row parallel depth-wise mapping
  bool drir = false;  // sub-row split depth-wise mapping
};

// One unit of gang-scheduled lane work: a weight vector applied to one
// output row (or sub-row), or one FC neuron.
struct WorkItem {
  uint32_t vector_index = 0;  // dense vector index; neuron index for FC
  uint16_t out_row = 0;
  uint16_t seg = 0;           // sub-row ordinal under D-RIR, else 0
  uint16_t seg_off = 0;       // first output column of the sub-row
  uint16_t seg_len = 0;       // output columns covered
  uint32_t cycles = 0;        // lane-busy duration
  uint32_t macs = 0;          // multiplies represented
};

// Items issued together; lanes are assigned in canonical order starting
// at lane 0. A wave lasts as long as its longest item.
struct Wave {
  uint32_t first_item = 0;
  uint32_t item_count = 0;
  uint32_t cycles = 0;
};

struct LaneSchedule {
  LayerKind kind = LayerKind::ConvNormal;
  std::vector<WorkItem> items;
  std::vector<Wave> waves;
  uint64_t compute_cycles = 0;     // sum of wave durations
  uint64_t busy_lane_cycles = 0;   // sum of item durations
  uint64_t total_macs = 0;

  double utilization(int lanes) const {
    return compute_cycles == 0
               ? 0.0
               : double(busy_lane_cycles) / (double(compute_cycles) * lanes);
  }
};

// Map one layer's surviving vectors onto the lane array.
//
// Row-in-row (normal / PW / FC): one item per (vector, output row) —
// the staged input row is reused across all Wout positions — packed
// greedily into 32-lane waves in (row, vector) order. Item duration:
// ceil(3*Wout/P) for 3x3 vectors, ceil(Wout/P) for PW vectors (the lane
// consumes one 3-channel group per cycle), ceil(Cin/P) per FC neuron.
//
// Depth-wise: without CIR/D-RIR the mapping is strictly serial, one
// kernel-row item per wave. CIR packs the three kernel rows of an output
// row into one wave (and fills remaining lanes with further rows and
// channels); D-RIR splits each output row into sub-rows of length
// drir_sub_row_len on separate lanes. Flags compose.
//
// staging_limit caps the input bytes a wave may stage; highly sparse
// layers otherwise stretch a 32-item wave across too many input rows.
LaneSchedule map_layer(const LayerSpec& layer, const SparseLayer& sparse,
                       const EngineConfig& cfg, const DataflowFlags& flags,
                       uint64_t staging_limit = kDefaultStagingLimit);

// Dense mapping: every vector present (sparsity disabled).
LaneSchedule map_layer_dense(const LayerSpec& layer, const EngineConfig& cfg,
                             const DataflowFlags& flags,
                             uint64_t staging_limit = kDefaultStagingLimit);

struct LayerUtilization {
  int layer = 0;
  LayerKind kind = LayerKind::ConvNormal;
  uint64_t compute_cycles = 0;
  uint64_t busy_lane_cycles = 0;
  double utilization = 0.0;
};

struct UtilizationReport {
  std::vector<LayerUtilization> layers;
  double aggregate_conv = 0.0;  // busy / capacity over conv layers only
  double aggregate_all = 0.0;
};

UtilizationReport utilization_report(const ModelSpec& model,
                                     const ModelWeights& weights,
                                     const EngineConfig& cfg,
                                     const DataflowFlags& flags,
                                     uint64_t staging_limit = kDefaultStagingLimit);

}  // namespace eg2c
