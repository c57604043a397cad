#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "eg2c/adaptation.hpp"
#include "eg2c/assembler.hpp"
#include "eg2c/reference_models.hpp"
#include "eg2c/simulator.hpp"
#include "eg2c/stream.hpp"

namespace eg2c {

enum class ConversionKind : uint8_t {
  Coarse = 0,
  Precise = 1,
};

struct OrchestratorConfig {
  int bpm = 80;                    // beat period = 60000 / bpm ms
  uint64_t switch_cycles = 64;     // program/weight base-pointer swap cost
  int16_t initial_threshold = 32767;  // everything coarse until adapted
  uint32_t refresh_interval = 0;   // adapt cadence after warm-up; 0 = N_w/4

  double period_ms() const { return 60000.0 / bpm; }
};

struct BeatResult {
  uint32_t beat_index = 0;
  int16_t detector_output = 0;
  bool anomaly = false;
  ConversionKind kind = ConversionKind::Coarse;
  int16_t threshold_used = 0;
  ActTensor ecg_frame;
  uint64_t detector_cycles = 0;
  uint64_t converter_cycles = 0;
  uint64_t cycles = 0;       // detector + converter + switch overheads
  double latency_ms = 0.0;
  double latency_fraction = 0.0;  // of the beat period
};

// The three per-beat programs assembled against one shared memory layout,
// so all models stay resident and only base pointers change per dispatch.
struct ProgramSuite {
  AssembledProgram detector;
  AssembledProgram coarse;
  AssembledProgram precise;
};

ProgramSuite assemble_suite(const ReferenceSuite& models,
                            const EngineConfig& engine, const MemoryConfig& mem,
                            const DataflowFlags& flags);

// Time-multiplexed per-beat pipeline on one engine: run the detector with
// the current threshold, classify, then run exactly one converter on the
// same frame. The detector output is fed to the adapter after detection.
class Orchestrator {
 public:
  Orchestrator(const ReferenceSuite& models, const EngineConfig& engine,
               const MemoryConfig& mem, const DataflowFlags& flags,
               const AdaptConfig& adapt, const OrchestratorConfig& cfg);

  BeatResult process_beat(const Beat& beat);

  // process_beat over the stream, refreshing the threshold whenever the
  // window fills and every refresh interval thereafter.
  std::vector<BeatResult> run_stream(const StreamFile& stream);

  const ThresholdAdapter& adapter() const { return adapter_; }
  ThresholdAdapter& adapter() { return adapter_; }
  Engine& engine() { return engine_; }
  const SimStats& last_detector_stats() const { return det_stats_; }
  const SimStats& last_converter_stats() const { return conv_stats_; }

  // Counters summed over every detector and converter run so far
  // (cycles include the per-beat switch overhead).
  const SimStats& totals() const { return totals_; }

  // (sample index, threshold) pairs recorded at each adaptation.
  const std::vector<std::pair<uint64_t, int16_t>>& threshold_trace() const {
    return trace_;
  }

 private:
  void maybe_adapt();

  ReferenceSuite models_;
  ProgramSuite suite_;
  Engine engine_;
  ThresholdAdapter adapter_;
  OrchestratorConfig cfg_;
  uint32_t refresh_;
  uint64_t last_adapt_at_ = 0;
  bool warmed_ = false;
  SimStats det_stats_;
  SimStats conv_stats_;
  SimStats totals_;
  std::vector<std::pair<uint64_t, int16_t>> trace_;
};

}  // namespace eg2c
