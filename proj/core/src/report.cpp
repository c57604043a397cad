#include "eg2c/report.hpp"

#include <algorithm>
#include <cstdio>

#include <json.hpp>

#include "eg2c/executor.hpp"
#include "eg2c/sparse.hpp"

namespace eg2c {
namespace {

using json = nlohmann::ordered_json;

json model_section(const ReferenceModel& m, const RunConfig& cfg,
                   const Tensor& frame) {
  const RunResult run = run_program(m.spec, m.weights, frame, cfg.engine,
                                    cfg.memory, cfg.features);
  DataflowFlags dense = cfg.features;
  dense.sparsity = false;
  const RunResult base =
      run_program(m.spec, m.weights, frame, cfg.engine, cfg.memory, dense);

  json j;
  j["role"] = model_role_name(m.spec.role);
  j["layers"] = m.spec.layers.size();
  j["macs_dense"] = model_macs(m.spec);
  j["macs_executed"] = run.stats.macs_executed;
  j["vector_sparsity"] = model_vector_sparsity(m.spec, m.weights);
  j["cycles"] = run.stats.total_cycles;
  j["latency_ms"] = run.stats.latency_ms(cfg.engine.clock_hz);
  j["latency_fraction"] =
      run.stats.latency_ms(cfg.engine.clock_hz) / cfg.orchestrator.period_ms();
  j["utilization_conv"] = run.stats.utilization_conv;
  j["utilization_all"] = run.stats.utilization_all;
  j["speedup_vs_dense"] =
      double(base.stats.total_cycles) / double(run.stats.total_cycles);
  return j;
}

}  // namespace

std::string make_run_report(const RunConfig& cfg, const ReferenceSuite& models,
                            const std::vector<BeatResult>& beats,
                            const SimStats& totals,
                            const std::vector<std::pair<uint64_t, int16_t>>& thresholds,
                            const CalibrationResult& calibration,
                            uint64_t offchip_weight_bytes) {
  json j;
  j["schema_version"] = kReportSchemaVersion;
  j["config"] = json::parse(run_config_to_json(cfg));

  const Tensor frame = calibration_frame();
  j["models"] = json::array({model_section(models.detector, cfg, frame),
                             model_section(models.coarse, cfg, frame),
                             model_section(models.precise, cfg, frame)});

  uint64_t precise = 0;
  double mean_frac = 0.0, max_frac = 0.0;
  for (const BeatResult& b : beats) {
    precise += b.kind == ConversionKind::Precise ? 1 : 0;
    mean_frac += b.latency_fraction;
    max_frac = std::max(max_frac, b.latency_fraction);
  }
  json dispatch;
  dispatch["beats"] = beats.size();
  dispatch["coarse"] = beats.size() - precise;
  dispatch["precise"] = precise;
  dispatch["mean_latency_fraction"] =
      beats.empty() ? 0.0 : mean_frac / double(beats.size());
  dispatch["max_latency_fraction"] = max_frac;
  j["dispatch"] = dispatch;

  json trace = json::array();
  for (const auto& [sample, threshold] : thresholds)
    trace.push_back({{"sample", sample}, {"threshold", threshold}});
  j["threshold_trace"] = trace;

  json counters;
  counters["total_cycles"] = totals.total_cycles;
  counters["frame_load_cycles"] = totals.frame_load_cycles;
  counters["instruction_cycles"] = totals.instruction_cycles;
  counters["macs_executed"] = totals.macs_executed;
  counters["macs_po2"] = totals.macs_po2;
  counters["macs_int8"] = totals.macs_int8;
  counters["weight_bytes_read"] = totals.weight_bytes_read;
  counters["index_bytes_read"] = totals.index_bytes_read;
  counters["act_gb_reads"] = totals.act_gb_reads;
  counters["act_gb_writes"] = totals.act_gb_writes;
  counters["input_frame_bytes"] = totals.input_frame_bytes;
  counters["offchip_act_accesses"] = totals.offchip_act_accesses;
  counters["offchip_weight_bytes"] = offchip_weight_bytes;
  j["counters"] = counters;

  json cal;
  cal["targets_ms"] = {{"detector", calibration.target_detector_ms},
                       {"coarse", calibration.target_coarse_ms},
                       {"precise", calibration.target_precise_ms}};
  json rows = json::array();
  for (const CalibrationRow& r : calibration.rows)
    rows.push_back({{"p", r.p},
                    {"detector_cycles", r.detector_cycles},
                    {"coarse_cycles", r.coarse_cycles},
                    {"precise_cycles", r.precise_cycles},
                    {"mean_rel_error", r.mean_rel_error}});
  cal["rows"] = rows;
  cal["best_p"] = calibration.best_p;
  cal["note"] = "latency comparison is informational only, never a pass/fail";
  j["calibration"] = cal;

  if (cfg.energy) {
    json energy;
    energy["banner"] =
        "energy coefficients are user-supplied placeholders, not "
        "silicon-calibrated measurements";
    energy["total_pj"] = totals.energy_pj(*cfg.energy);
    j["energy"] = energy;
  }
  return j.dump(2) + "\n";
}

std::string make_beats_csv(const StreamFile& stream,
                           const std::vector<BeatResult>& beats) {
  std::string out =
      "beat_index,label,anomaly,kind,cycles,latency_ms,latency_fraction\n";
  char buf[160];
  for (size_t i = 0; i < beats.size(); ++i) {
    const BeatResult& b = beats[i];
    const int label = i < stream.beats.size() ? stream.beats[i].label : 0;
    std::snprintf(buf, sizeof buf, "%u,%d,%d,%s,%llu,%.6f,%.6f\n",
                  b.beat_index, label, b.anomaly ? 1 : 0,
                  b.kind == ConversionKind::Precise ? "precise" : "coarse",
                  (unsigned long long)b.cycles, b.latency_ms,
                  b.latency_fraction);
    out += buf;
  }
  return out;
}

}  // namespace eg2c
