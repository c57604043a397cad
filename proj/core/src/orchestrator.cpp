#include "eg2c/orchestrator.hpp"

#include <utility>

namespace eg2c {
namespace {

void accumulate(SimStats& into, const SimStats& s) {
  into.total_cycles += s.total_cycles;
  into.frame_load_cycles += s.frame_load_cycles;
  into.instruction_cycles += s.instruction_cycles;
  into.macs_executed += s.macs_executed;
  into.macs_po2 += s.macs_po2;
  into.macs_int8 += s.macs_int8;
  into.weight_bytes_read += s.weight_bytes_read;
  into.index_bytes_read += s.index_bytes_read;
  into.act_gb_reads += s.act_gb_reads;
  into.act_gb_writes += s.act_gb_writes;
  into.input_frame_bytes += s.input_frame_bytes;
  into.offchip_act_accesses += s.offchip_act_accesses;
}

}  // namespace

ProgramSuite assemble_suite(const ReferenceSuite& models,
                            const EngineConfig& engine, const MemoryConfig& mem,
                            const DataflowFlags& flags) {
  ProgramSuite suite;
  AssembleOptions opts;
  opts.flags = flags;
  suite.detector = assemble(models.detector.spec, models.detector.weights,
                            engine, mem, opts);
  opts.weight_base = suite.detector.weight_end;
  opts.index_base = suite.detector.index_end;
  suite.coarse =
      assemble(models.coarse.spec, models.coarse.weights, engine, mem, opts);
  opts.weight_base = suite.coarse.weight_end;
  opts.index_base = suite.coarse.index_end;
  suite.precise =
      assemble(models.precise.spec, models.precise.weights, engine, mem, opts);
  return suite;
}

Orchestrator::Orchestrator(const ReferenceSuite& models,
                           const EngineConfig& engine, const MemoryConfig& mem,
                           const DataflowFlags& flags, const AdaptConfig& adapt,
                           const OrchestratorConfig& cfg)
    : models_(models),
      suite_(assemble_suite(models, engine, mem, flags)),
      engine_(engine, mem),
      adapter_(adapt),
      cfg_(cfg),
      refresh_(cfg.refresh_interval ? cfg.refresh_interval : adapt.window / 4) {
  engine_.load_model(suite_.detector, models_.detector.spec,
                     models_.detector.weights);
  engine_.load_model(suite_.coarse, models_.coarse.spec, models_.coarse.weights);
  engine_.load_model(suite_.precise, models_.precise.spec,
                     models_.precise.weights);
  adapter_.set_threshold(cfg_.initial_threshold);
}

void Orchestrator::maybe_adapt() {
  if (!adapter_.window_full()) return;
  const uint64_t seen = adapter_.samples_seen();
  if (warmed_ && seen - last_adapt_at_ < refresh_) return;
  const int16_t t = adapter_.adapt_threshold();
  warmed_ = true;
  last_adapt_at_ = seen;
  trace_.emplace_back(seen, t);
}

BeatResult Orchestrator::process_beat(const Beat& beat) {
  const int16_t threshold = adapter_.threshold();
  const auto det_words =
      with_threshold(suite_.detector.program.words, threshold);
  RunResult det =
      engine_.run(det_words, models_.detector.spec, beat.frame, nullptr);
  const int16_t score = det.output.data.at(0);
  const bool anomaly = det.stats.anomaly_flag;

  const AssembledProgram& conv_prog = anomaly ? suite_.precise : suite_.coarse;
  const ModelSpec& conv_spec =
      anomaly ? models_.precise.spec : models_.coarse.spec;
  RunResult conv =
      engine_.run(conv_prog.program.words, conv_spec, beat.frame, nullptr);

  adapter_.observe(score);
  maybe_adapt();

  BeatResult r;
  r.beat_index = beat.index;
  r.detector_output = score;
  r.anomaly = anomaly;
  r.kind = anomaly ? ConversionKind::Precise : ConversionKind::Coarse;
  r.threshold_used = threshold;
  r.ecg_frame = std::move(conv.output);
  r.detector_cycles = det.stats.total_cycles;
  r.converter_cycles = conv.stats.total_cycles;
  // one switch into the converter, one back to the detector for the next
  // beat
  r.cycles = r.detector_cycles + r.converter_cycles + 2 * cfg_.switch_cycles;
  r.latency_ms =
      double(r.cycles) / double(engine_.engine_config().clock_hz) * 1e3;
  r.latency_fraction = r.latency_ms / cfg_.period_ms();

  accumulate(totals_, det.stats);
  accumulate(totals_, conv.stats);
  totals_.total_cycles += 2 * cfg_.switch_cycles;
  totals_.offchip_weight_bytes = engine_.session_offchip_weight_bytes();
  det_stats_ = std::move(det.stats);
  conv_stats_ = std::move(conv.stats);
  return r;
}

std::vector<BeatResult> Orchestrator::run_stream(const StreamFile& stream) {
  std::vector<BeatResult> results;
  results.reserve(stream.beats.size());
  for (const Beat& b : stream.beats) results.push_back(process_beat(b));
  return results;
}

}  // namespace eg2c
