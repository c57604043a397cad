#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <ostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "eg2c/adaptation.hpp"
#include "eg2c/assembler.hpp"
#include "eg2c/errors.hpp"
#include "eg2c/isa.hpp"
#include "eg2c/model_io.hpp"
#include "eg2c/orchestrator.hpp"
#include "eg2c/reference_models.hpp"
#include "eg2c/report.hpp"
#include "eg2c/run_config.hpp"
#include "eg2c/simulator.hpp"
#include "eg2c/sparse.hpp"
#include "eg2c/stream.hpp"

namespace eg2c::cli {
namespace {

using json = nlohmann::ordered_json;

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path);
  f << content;
}

// Model files are optional on most subcommands; without one the built-in
// reference suite is used.
ModelFile load_or_build(const std::string& path) {
  if (!path.empty()) return load_models(path);
  const ReferenceSuite suite = build_reference_models();
  return ModelFile{{suite.detector, suite.coarse, suite.precise}};
}

ReferenceSuite suite_from(const ModelFile& file) {
  ReferenceSuite suite;
  bool have[3] = {false, false, false};
  for (const ReferenceModel& m : file.models) {
    switch (m.spec.role) {
      case ModelRole::Detector: suite.detector = m; have[0] = true; break;
      case ModelRole::CoarseConverter: suite.coarse = m; have[1] = true; break;
      case ModelRole::PreciseConverter: suite.precise = m; have[2] = true; break;
    }
  }
  if (!have[0] || !have[1] || !have[2])
    throw IoError("model file must contain detector, coarse and precise models");
  return suite;
}

const ReferenceModel& pick_role(const ModelFile& file, const std::string& role) {
  for (const ReferenceModel& m : file.models)
    if (role == model_role_name(m.spec.role)) return m;
  throw IoError("model file has no " + role + " model");
}

struct FeatureOverride {
  bool no_sparse = false;
  bool no_cir = false;
  bool no_drir = false;

  void apply(DataflowFlags& f) const {
    if (no_sparse) f.sparsity = false;
    if (no_cir) f.cir = false;
    if (no_drir) f.drir = false;
  }
};

RunConfig config_for(const std::string& path) {
  return path.empty() ? default_run_config() : load_run_config(path);
}

// -------------------------------------------------------------------------
// gen: synthetic beat stream and/or the built-in model suite

struct GenArgs {
  uint64_t seed = 7;
  uint32_t beats = 1000;
  double rate = 0.1;
  DriftSpec drift;
  std::string stream_out;
  std::string models_out;
};

int cmd_gen(const GenArgs& a, std::ostream& out, std::ostream& err) {
  if (a.stream_out.empty() && a.models_out.empty()) {
    err << "gen: nothing to do, pass --out and/or --models-out\n";
    return 1;
  }
  if (!a.models_out.empty()) {
    save_models(a.models_out, load_or_build(""));
    out << "wrote " << a.models_out << " (detector, coarse, precise)\n";
  }
  if (!a.stream_out.empty()) {
    const StreamFile stream = gen_stream(a.seed, a.beats, a.rate, a.drift);
    save_stream(a.stream_out, stream);
    uint32_t anomalies = 0;
    for (const Beat& b : stream.beats) anomalies += b.label;
    out << "wrote " << a.stream_out << ": " << stream.beats.size()
        << " beats, " << anomalies << " anomalous\n";
  }
  return 0;
}

// -------------------------------------------------------------------------
// compile: model -> instruction stream (+ optional schedule dump)

struct CompileArgs {
  std::string models;
  std::string role = "detector";
  std::string out_path;
  std::string config;
  std::string schedule_json;
  FeatureOverride features;
};

int cmd_compile(const CompileArgs& a, std::ostream& out) {
  RunConfig cfg = config_for(a.config);
  a.features.apply(cfg.features);
  const ModelFile file = load_or_build(a.models);
  const ReferenceModel& model = pick_role(file, a.role);

  AssembleOptions opts;
  opts.flags = cfg.features;
  const AssembledProgram prog =
      assemble(model.spec, model.weights, cfg.engine, cfg.memory, opts);
  save_program(a.out_path, prog.program);
  out << "wrote " << a.out_path << ": " << prog.program.words.size()
      << " words, " << model.spec.layers.size() << " layers, "
      << prog.weight_end << " weight bytes, " << prog.index_end
      << " index bytes\n";

  if (!a.schedule_json.empty()) {
    const UtilizationReport rep =
        utilization_report(model.spec, model.weights, cfg.engine, cfg.features,
                           cfg.memory.in_act_buf);
    json j;
    j["role"] = a.role;
    json layers = json::array();
    for (const LayerUtilization& l : rep.layers)
      layers.push_back({{"layer", l.layer},
                        {"kind", layer_kind_name(l.kind)},
                        {"compute_cycles", l.compute_cycles},
                        {"busy_lane_cycles", l.busy_lane_cycles},
                        {"utilization", l.utilization}});
    j["layers"] = layers;
    j["aggregate_conv"] = rep.aggregate_conv;
    j["aggregate_all"] = rep.aggregate_all;
    write_file(a.schedule_json, j.dump(2) + "\n");
    out << "wrote " << a.schedule_json << "\n";
  }
  return 0;
}

// -------------------------------------------------------------------------
// prune: magnitude-based vector pruning of every conv layer

struct PruneArgs {
  std::string models;
  std::string out_path;
  double sparsity = 0.0;
};

int cmd_prune(const PruneArgs& a, std::ostream& out) {
  ModelFile file = load_or_build(a.models);
  for (ReferenceModel& m : file.models) {
    m.weights = prune_model(m.spec, m.weights, a.sparsity);
    out << model_role_name(m.spec.role) << ": vector_sparsity="
        << model_vector_sparsity(m.spec, m.weights) << "\n";
  }
  save_models(a.out_path, file);
  out << "wrote " << a.out_path << "\n";
  return 0;
}

// -------------------------------------------------------------------------
// run: orchestrated per-beat pipeline over a stream file

struct RunArgs {
  std::string stream;
  std::string models;
  std::string config;
  std::string report;
  std::string beats_csv;
};

int cmd_run(const RunArgs& a, std::ostream& out) {
  RunConfig cfg = config_for(a.config);
  const StreamFile stream = load_stream(a.stream);
  const ReferenceSuite suite = suite_from(load_or_build(a.models));

  Orchestrator orch(suite, cfg.engine, cfg.memory, cfg.features, cfg.adapt,
                    cfg.orchestrator);
  const std::vector<BeatResult> beats = orch.run_stream(stream);

  uint64_t precise = 0, correct = 0;
  for (size_t i = 0; i < beats.size(); ++i) {
    precise += beats[i].kind == ConversionKind::Precise ? 1 : 0;
    correct += beats[i].anomaly == (stream.beats[i].label != 0) ? 1 : 0;
  }
  out << beats.size() << " beats: " << precise << " precise, "
      << beats.size() - precise << " coarse\n";
  if (!beats.empty())
    out << "dispatch accuracy vs stream labels: "
        << double(correct) / double(beats.size()) << "\n";
  out << "adaptations: " << orch.threshold_trace().size()
      << ", final threshold " << orch.adapter().threshold() << "\n";

  if (!a.report.empty()) {
    const CalibrationResult cal =
        calibrate_p(cfg.engine, cfg.memory, cfg.features);
    const std::string report = make_run_report(
        cfg, suite, beats, orch.totals(), orch.threshold_trace(), cal,
        orch.engine().session_offchip_weight_bytes());
    write_file(a.report, report);
    out << "wrote " << a.report << "\n";
  }
  if (!a.beats_csv.empty()) {
    write_file(a.beats_csv, make_beats_csv(stream, beats));
    out << "wrote " << a.beats_csv << "\n";
  }
  return 0;
}

// -------------------------------------------------------------------------
// adapt-demo: replay a detector-score file through the threshold adapter

struct AdaptDemoArgs {
  std::string scores;
  std::string out_path;
  int bins = 16;
  uint32_t window = 4096;
  uint32_t refresh = 0;  // 0 = window / 4
  std::vector<int> sensitive;
};

int cmd_adapt_demo(const AdaptDemoArgs& a, std::ostream& out) {
  AdaptConfig cfg;
  cfg.bins = a.bins;
  cfg.window = a.window;
  if (!a.sensitive.empty())
    cfg.sensitive = std::make_pair(a.sensitive[0], a.sensitive[1]);
  cfg.validate();
  const uint32_t refresh = a.refresh ? a.refresh : a.window / 4;

  const std::vector<int16_t> scores = load_scores(a.scores);
  ThresholdAdapter adapter(cfg);
  std::string csv = "sample_index,threshold\n";
  uint64_t last_adapt = 0;
  bool warmed = false;
  for (const int16_t s : scores) {
    adapter.observe(s);
    if (!adapter.window_full()) continue;
    const uint64_t seen = adapter.samples_seen();
    if (warmed && seen - last_adapt < refresh) continue;
    const int16_t t = adapter.adapt_threshold();
    warmed = true;
    last_adapt = seen;
    csv += std::to_string(seen) + "," + std::to_string(t) + "\n";
  }
  if (a.out_path.empty())
    out << csv;
  else {
    write_file(a.out_path, csv);
    out << "wrote " << a.out_path << "\n";
  }
  return 0;
}

// -------------------------------------------------------------------------
// sweep: speedup-vs-sparsity curve plus the lane-throughput calibration

struct SweepArgs {
  std::string models;
  std::string config;
  std::string out_path;
  std::vector<double> grid = {0.0, 0.1,  0.2, 0.3, 0.394,
                              0.5, 0.6,  0.7, 0.8, 0.9};
  unsigned jobs = 0;  // 0 = hardware concurrency
};

json speedup_entry(const SpeedupPoint& p) {
  return {{"requested_sparsity", p.requested_sparsity},
          {"achieved_sparsity", p.achieved_sparsity},
          {"dense_cycles", p.dense_cycles},
          {"sparse_cycles", p.sparse_cycles},
          {"speedup", p.speedup}};
}

int cmd_sweep(const SweepArgs& a, std::ostream& out) {
  const RunConfig cfg = config_for(a.config);
  const ReferenceSuite suite = suite_from(load_or_build(a.models));

  std::vector<double> grid = a.grid;
  std::sort(grid.begin(), grid.end());

  // One task per grid point; each owns its result slot, so the thread
  // pool needs no ordering guarantees.
  struct Row {
    double s = 0.0;
    SpeedupPoint coarse, precise;
  };
  std::vector<Row> rows(grid.size());
  std::atomic<size_t> next{0};
  const unsigned jobs = std::max(
      1u, a.jobs ? a.jobs
                 : std::min<unsigned>(std::thread::hardware_concurrency(),
                                      unsigned(grid.size())));
  auto worker = [&] {
    for (size_t i = next.fetch_add(1); i < grid.size(); i = next.fetch_add(1)) {
      Row& r = rows[i];
      r.s = grid[i];
      r.coarse = speedup_vs_dense(suite.coarse.spec, suite.coarse.weights, r.s,
                                  cfg.engine, cfg.memory, cfg.features);
      r.precise = speedup_vs_dense(suite.precise.spec, suite.precise.weights,
                                   r.s, cfg.engine, cfg.memory, cfg.features);
    }
  };
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < jobs; ++i) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  json j;
  json curve = json::array();
  for (const Row& r : rows) {
    curve.push_back({{"sparsity", r.s},
                     {"coarse", speedup_entry(r.coarse)},
                     {"precise", speedup_entry(r.precise)}});
    out << "s=" << r.s << " coarse " << r.coarse.speedup << "x, precise "
        << r.precise.speedup << "x\n";
  }
  j["speedup_curve"] = curve;

  const CalibrationResult cal = calibrate_p(cfg.engine, cfg.memory, cfg.features);
  json rows_json = json::array();
  for (const CalibrationRow& r : cal.rows)
    rows_json.push_back({{"p", r.p},
                         {"detector_cycles", r.detector_cycles},
                         {"coarse_cycles", r.coarse_cycles},
                         {"precise_cycles", r.precise_cycles},
                         {"mean_rel_error", r.mean_rel_error}});
  j["calibration"] = {{"targets_ms",
                       {{"detector", cal.target_detector_ms},
                        {"coarse", cal.target_coarse_ms},
                        {"precise", cal.target_precise_ms}}},
                      {"rows", rows_json},
                      {"best_p", cal.best_p}};
  out << "calibration best P=" << cal.best_p << "\n";

  if (!a.out_path.empty()) {
    write_file(a.out_path, j.dump(2) + "\n");
    out << "wrote " << a.out_path << "\n";
  }
  return 0;
}

// -------------------------------------------------------------------------
// disasm: program container -> listing

int cmd_disasm(const std::string& path, std::ostream& out) {
  out << disassemble(load_program(path));
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"event-driven EGM-to-ECG conversion engine: compiler, "
               "simulator and stream tools",
               "eg2c"};
  app.require_subcommand(1);

  GenArgs gen;
  CLI::App* sub_gen = app.add_subcommand(
      "gen", "Generate a synthetic beat stream and/or the built-in models");
  sub_gen->add_option("--seed", gen.seed, "Stream RNG seed");
  sub_gen->add_option("--beats", gen.beats, "Number of beats");
  sub_gen->add_option("--rate", gen.rate, "Mean anomaly probability")
      ->check(CLI::Range(0.0, 1.0));
  sub_gen->add_option("--drift", gen.drift.drift,
                      "Anomaly-margin spread lost by stream end");
  sub_gen->add_option("--gain", gen.drift.anomaly_gain,
                      "Full-strength anomaly amplitude ratio");
  sub_gen->add_option("--jitter", gen.drift.jitter, "Per-beat amplitude jitter");
  sub_gen->add_option("--quiet-rate", gen.drift.quiet_rate,
                      "Chance of a low-amplitude normal beat");
  sub_gen->add_option("--rate-growth", gen.drift.rate_growth,
                      "Relative rise of the anomaly rate over the stream");
  sub_gen->add_option("--out", gen.stream_out, "Stream CSV path");
  sub_gen->add_option("--models-out", gen.models_out, "Model container path");

  CompileArgs compile;
  CLI::App* sub_compile =
      app.add_subcommand("compile", "Compile one model to an instruction stream");
  sub_compile->add_option("--models", compile.models,
                          "Model container (defaults to the built-in suite)");
  sub_compile->add_option("--role", compile.role, "Model to compile")
      ->check(CLI::IsMember({"detector", "coarse", "precise"}));
  sub_compile->add_option("--out", compile.out_path, "Program output path")
      ->required();
  sub_compile->add_option("--config", compile.config, "Run config JSON");
  sub_compile->add_option("--schedule-json", compile.schedule_json,
                          "Write the per-layer lane schedule report here");
  sub_compile->add_flag("--no-sparse", compile.features.no_sparse,
                        "Disable sparsity skipping");
  sub_compile->add_flag("--no-cir", compile.features.no_cir,
                        "Disable the kernel-row parallel depth-wise mapping");
  sub_compile->add_flag("--no-drir", compile.features.no_drir,
                        "Disable the sub-row split depth-wise mapping");

  PruneArgs prune;
  CLI::App* sub_prune =
      app.add_subcommand("prune", "Vector-prune every conv layer of a model file");
  sub_prune->add_option("--models", prune.models,
                        "Model container (defaults to the built-in suite)");
  sub_prune->add_option("--sparsity", prune.sparsity,
                        "Target vector sparsity")
      ->required()
      ->check(CLI::Range(0.0, 0.999));
  sub_prune->add_option("--out", prune.out_path, "Pruned model container path")
      ->required();

  RunArgs run;
  CLI::App* sub_run =
      app.add_subcommand("run", "Run the per-beat pipeline over a stream");
  sub_run->add_option("--stream", run.stream, "Stream CSV")->required();
  sub_run->add_option("--models", run.models,
                      "Model container (defaults to the built-in suite)");
  sub_run->add_option("--config", run.config, "Run config JSON");
  sub_run->add_option("--report", run.report, "Aggregate JSON report path");
  sub_run->add_option("--beats-csv", run.beats_csv, "Per-beat CSV path");

  AdaptDemoArgs adapt;
  CLI::App* sub_adapt = app.add_subcommand(
      "adapt-demo", "Replay a score CSV through the threshold adapter");
  sub_adapt->add_option("--scores", adapt.scores, "Score CSV (one int16 per row)")
      ->required();
  sub_adapt->add_option("--bins", adapt.bins, "Histogram bins");
  sub_adapt->add_option("--window", adapt.window, "Window size in samples");
  sub_adapt->add_option("--refresh", adapt.refresh,
                        "Samples between adaptations (0 = window/4)");
  sub_adapt->add_option("--sensitive", adapt.sensitive,
                        "Sensitive bin interval, e.g. --sensitive 2 12")
      ->expected(2);
  sub_adapt->add_option("--out", adapt.out_path,
                        "Threshold trace CSV (default: stdout)");

  SweepArgs sweep;
  CLI::App* sub_sweep = app.add_subcommand(
      "sweep", "Speedup-vs-sparsity curve and lane-throughput calibration");
  sub_sweep->add_option("--models", sweep.models,
                        "Model container (defaults to the built-in suite)");
  sub_sweep->add_option("--config", sweep.config, "Run config JSON");
  sub_sweep->add_option("--grid", sweep.grid, "Sparsity grid points")
      ->delimiter(',');
  sub_sweep->add_option("--jobs", sweep.jobs,
                        "Worker threads (0 = hardware concurrency)");
  sub_sweep->add_option("--out", sweep.out_path, "Sweep JSON path");

  std::string disasm_path;
  CLI::App* sub_disasm =
      app.add_subcommand("disasm", "Disassemble a program container");
  sub_disasm->add_option("program", disasm_path, "Program file")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  try {
    if (*sub_gen) return cmd_gen(gen, out, err);
    if (*sub_compile) return cmd_compile(compile, out);
    if (*sub_prune) return cmd_prune(prune, out);
    if (*sub_run) return cmd_run(run, out);
    if (*sub_adapt) return cmd_adapt_demo(adapt, out);
    if (*sub_sweep) return cmd_sweep(sweep, out);
    if (*sub_disasm) return cmd_disasm(disasm_path, out);
  } catch (const Fault& e) {
    err << "simulation fault: " << e.what() << "\n";
    return 3;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace eg2c::cli
