#pragma once

#include <string>
#include <vector>

#include "eg2c/orchestrator.hpp"
#include "eg2c/run_config.hpp"
#include "eg2c/simulator.hpp"

namespace eg2c {

// Published per-model latencies the calibration sweep is compared
// against (milliseconds at the 2 MHz reference clock).
constexpr double kTargetDetectorMs = 0.32;
constexpr double kTargetCoarseMs = 9.62;
constexpr double kTargetPreciseMs = 13.32;

constexpr const char* kReportSchemaVersion = "1";

// Aggregate run report as a JSON string conforming to
// schema/report.schema.json. Includes per-model utilization and MAC
// counts, dispatch statistics, the threshold trace, the latency
// calibration table (comparison only, never pass/fail), and the energy
// estimate when coefficients were supplied.
std::string make_run_report(const RunConfig& cfg, const ReferenceSuite& models,
                            const std::vector<BeatResult>& beats,
                            const SimStats& totals,
                            const std::vector<std::pair<uint64_t, int16_t>>& thresholds,
                            const CalibrationResult& calibration,
                            uint64_t offchip_weight_bytes);

// Per-beat CSV: beat_index,label,anomaly,kind,cycles,latency_ms,latency_fraction.
std::string make_beats_csv(const StreamFile& stream,
                           const std::vector<BeatResult>& beats);

}  // namespace eg2c
