#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "eg2c/assembler.hpp"
#include "eg2c/dataflow.hpp"
#include "eg2c/isa.hpp"
#include "eg2c/memory.hpp"
#include "eg2c/model.hpp"
#include "eg2c/tensor.hpp"

namespace eg2c {

// Optional linear energy estimate. Coefficients are user-supplied
// placeholders, not silicon measurements; reports carry that caveat.
struct EnergyModel {
  double pj_per_mac_po2 = 0.0;
  double pj_per_mac_int8 = 0.0;
  double pj_per_weight_byte = 0.0;
  double pj_per_index_byte = 0.0;
  double pj_per_act_read_byte = 0.0;
  double pj_per_act_write_byte = 0.0;
  double pj_per_offchip_byte = 0.0;
};

struct LayerStats {
  int layer = 0;
  LayerKind kind = LayerKind::ConvNormal;
  uint64_t compute_cycles = 0;
  uint64_t prep_cycles = 0;
  uint64_t overlap_saved_cycles = 0;  // serial (compute+prep) minus charged
  uint64_t cycles = 0;                // charged: max(compute, prep) + fill
  uint64_t busy_lane_cycles = 0;
  uint64_t waves = 0;
  uint64_t items = 0;
  uint64_t macs = 0;
  double utilization = 0.0;
};

struct SimStats {
  uint64_t total_cycles = 0;
  uint64_t frame_load_cycles = 0;
  uint64_t instruction_cycles = 0;  // 1-cycle control instructions
  std::vector<LayerStats> layers;

  uint64_t macs_executed = 0;
  uint64_t macs_po2 = 0;
  uint64_t macs_int8 = 0;
  uint64_t weight_bytes_read = 0;   // from weight GB, once per layer
  uint64_t index_bytes_read = 0;
  uint64_t act_gb_reads = 0;        // bytes staged into in_act_buf
  uint64_t act_gb_writes = 0;       // bytes written through out_act_buf
  uint64_t input_frame_bytes = 0;   // initial off-chip frame load
  uint64_t offchip_act_accesses = 0;  // act bytes from off-chip after load
  uint64_t offchip_weight_bytes = 0;  // preload traffic

  bool anomaly_flag = false;
  int16_t threshold = 0;

  double utilization_conv = 0.0;
  double utilization_all = 0.0;
  double latency_ms(uint64_t clock_hz) const {
    return double(total_cycles) / double(clock_hz) * 1e3;
  }
  double energy_pj(const EnergyModel& em) const;
};

struct RunResult {
  ActTensor output;
  SimStats stats;
};

// Test/diagnostic hooks. on_layer fires after each RUN_LAYER with the
// layer id and the just-written output; on_wave_staging fires per wave
// with the deduplicated (channel, input row) set staged for it.
struct SimHooks {
  std::function<void(int layer, const ActTensor& out)> on_layer;
  std::function<void(int layer, uint32_t wave,
                     const std::vector<std::pair<int, int>>& rows)>
      on_wave_staging;
};

// Cycle-approximate engine. Holds the persistent on-chip state so that
// several programs (detector + converters) can run against one resident
// weight image, as the orchestrator does.
class Engine {
 public:
  Engine(const EngineConfig& engine, const MemoryConfig& mem);

  // Serialize a model's weight/index streams into the global buffers at
  // the offsets its program encodes. Counts off-chip preload traffic.
  void load_model(const AssembledProgram& prog, const ModelSpec& model,
                  const ModelWeights& weights);

  // Execute a program against the resident state. The input frame is
  // loaded into act GB A at offset 0 (the one permitted off-chip act
  // transfer), then instructions run until HALT. Throws Fault.
  RunResult run(const std::vector<uint32_t>& words, const ModelSpec& model,
                const Tensor& input, const SimHooks* hooks = nullptr);

  uint64_t session_offchip_weight_bytes() const { return offchip_weight_bytes_; }
  const EngineConfig& engine_config() const { return engine_; }
  const MemoryConfig& memory_config() const { return mem_; }

 private:
  struct Exec;
  EngineConfig engine_;
  MemoryConfig mem_;
  std::vector<uint8_t> weight_gb_;
  std::vector<uint8_t> index_sram_;
  std::vector<uint8_t> act_gb_a_;
  std::vector<uint8_t> act_gb_b_;
  // Extents of each resident weight/index stream, keyed by weight GB
  // offset; RUN_LAYER resolves its SET_ADDR operand against this table.
  std::vector<LayerPlacement> resident_;
  uint64_t offchip_weight_bytes_ = 0;
  int16_t threshold_reg_ = 0;
  friend struct Exec;
};

// Assemble, preload, and run one model in a fresh engine.
RunResult run_program(const ModelSpec& model, const ModelWeights& weights,
                      const Tensor& input, const EngineConfig& engine,
                      const MemoryConfig& mem, const DataflowFlags& flags,
                      const SimHooks* hooks = nullptr);

struct SpeedupPoint {
  double requested_sparsity = 0.0;
  double achieved_sparsity = 0.0;
  uint64_t dense_cycles = 0;   // dense weights, sparsity disabled
  uint64_t sparse_cycles = 0;  // pruned weights, sparsity enabled
  double speedup = 0.0;
};

// Prune to `sparsity`, then compare end-to-end cycles against the dense
// run with identical dataflow flags.
SpeedupPoint speedup_vs_dense(const ModelSpec& model, const ModelWeights& weights,
                              double sparsity, const EngineConfig& engine,
                              const MemoryConfig& mem, DataflowFlags flags);

// Cycle counts for one inference at several per-lane throughputs P; used
// to pick the P that best matches published per-model latencies.
struct CalibrationRow {
  int p = 1;
  uint64_t detector_cycles = 0;
  uint64_t coarse_cycles = 0;
  uint64_t precise_cycles = 0;
  double mean_rel_error = 0.0;
};

struct CalibrationResult {
  std::vector<CalibrationRow> rows;
  int best_p = 1;
  // Reference latencies (ms at the configured clock) the sweep is scored
  // against. Reported for comparison only, never asserted.
  double target_detector_ms = 0.0;
  double target_coarse_ms = 0.0;
  double target_precise_ms = 0.0;
};

CalibrationResult calibrate_p(const EngineConfig& engine, const MemoryConfig& mem,
                              const DataflowFlags& flags, int p_max = 32);

}  // namespace eg2c
