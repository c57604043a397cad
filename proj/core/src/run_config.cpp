#include "eg2c/run_config.hpp"

#include <fstream>

#include <json.hpp>

#include "eg2c/errors.hpp"

namespace eg2c {
namespace {

using json = nlohmann::ordered_json;

void reject_unknown(const json& obj, const char* scope,
                    std::initializer_list<const char*> known) {
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok)
      throw ConfigError("unknown key " + std::string(scope) + "." + key);
  }
}

template <typename T>
void get(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("bad value for ") + key);
  }
}

void parse_engine(const json& j, EngineConfig& e) {
  reject_unknown(j, "engine",
                 {"lanes", "macs_per_lane_per_cycle", "drir_sub_row_len",
                  "clock_hz"});
  get(j, "lanes", e.lanes);
  get(j, "macs_per_lane_per_cycle", e.macs_per_lane_per_cycle);
  get(j, "drir_sub_row_len", e.drir_sub_row_len);
  get(j, "clock_hz", e.clock_hz);
}

void parse_memory(const json& j, MemoryConfig& m) {
  reject_unknown(j, "memory",
                 {"weight_gb", "index_sram", "act_gb_a", "act_gb_b",
                  "in_act_buf", "out_act_buf", "instr_words",
                  "prep_bandwidth"});
  get(j, "weight_gb", m.weight_gb);
  get(j, "index_sram", m.index_sram);
  get(j, "act_gb_a", m.act_gb_a);
  get(j, "act_gb_b", m.act_gb_b);
  get(j, "in_act_buf", m.in_act_buf);
  get(j, "out_act_buf", m.out_act_buf);
  get(j, "instr_words", m.instr_words);
  get(j, "prep_bandwidth", m.prep_bandwidth);
}

void parse_features(const json& j, DataflowFlags& f) {
  reject_unknown(j, "features", {"sparsity", "cir", "drir"});
  get(j, "sparsity", f.sparsity);
  get(j, "cir", f.cir);
  get(j, "drir", f.drir);
}

void parse_adapt(const json& j, AdaptConfig& a) {
  reject_unknown(j, "adapt",
                 {"bins", "window", "t_days", "range", "sensitive", "mode",
                  "threshold_mode"});
  get(j, "bins", a.bins);
  get(j, "window", a.window);
  get(j, "t_days", a.t_days);
  if (j.contains("range") && !j.at("range").is_null()) {
    std::pair<int16_t, int16_t> r;
    try {
      r.first = j.at("range").at(0).get<int16_t>();
      r.second = j.at("range").at(1).get<int16_t>();
    } catch (const json::exception&) {
      throw ConfigError("adapt.range must be [lo, hi]");
    }
    a.range = r;
  }
  if (j.contains("sensitive") && !j.at("sensitive").is_null()) {
    std::pair<int, int> r;
    try {
      r.first = j.at("sensitive").at(0).get<int>();
      r.second = j.at("sensitive").at(1).get<int>();
    } catch (const json::exception&) {
      throw ConfigError("adapt.sensitive must be [first_bin, last_bin]");
    }
    a.sensitive = r;
  }
  if (j.contains("mode")) {
    const std::string m = j.at("mode").get<std::string>();
    if (m == "sliding")
      a.mode = WindowMode::Sliding;
    else if (m == "tumbling")
      a.mode = WindowMode::Tumbling;
    else
      throw ConfigError("adapt.mode must be sliding or tumbling");
  }
  if (j.contains("threshold_mode")) {
    const std::string m = j.at("threshold_mode").get<std::string>();
    if (m == "bin_midpoint")
      a.threshold_mode = ThresholdMode::BinMidpoint;
    else if (m == "sample_mean")
      a.threshold_mode = ThresholdMode::SampleMean;
    else
      throw ConfigError("adapt.threshold_mode must be bin_midpoint or sample_mean");
  }
}

void parse_orchestrator(const json& j, OrchestratorConfig& o) {
  reject_unknown(j, "orchestrator",
                 {"bpm", "switch_cycles", "initial_threshold",
                  "refresh_interval"});
  get(j, "bpm", o.bpm);
  get(j, "switch_cycles", o.switch_cycles);
  get(j, "initial_threshold", o.initial_threshold);
  get(j, "refresh_interval", o.refresh_interval);
}

void parse_energy(const json& j, EnergyModel& e) {
  reject_unknown(j, "energy",
                 {"pj_per_mac_po2", "pj_per_mac_int8", "pj_per_weight_byte",
                  "pj_per_index_byte", "pj_per_act_read_byte",
                  "pj_per_act_write_byte", "pj_per_offchip_byte"});
  get(j, "pj_per_mac_po2", e.pj_per_mac_po2);
  get(j, "pj_per_mac_int8", e.pj_per_mac_int8);
  get(j, "pj_per_weight_byte", e.pj_per_weight_byte);
  get(j, "pj_per_index_byte", e.pj_per_index_byte);
  get(j, "pj_per_act_read_byte", e.pj_per_act_read_byte);
  get(j, "pj_per_act_write_byte", e.pj_per_act_write_byte);
  get(j, "pj_per_offchip_byte", e.pj_per_offchip_byte);
}

}  // namespace

void RunConfig::validate() const {
  if (engine.lanes <= 0) throw ConfigError("engine.lanes must be positive");
  if (engine.macs_per_lane_per_cycle <= 0)
    throw ConfigError("engine.macs_per_lane_per_cycle must be positive");
  if (engine.drir_sub_row_len <= 0)
    throw ConfigError("engine.drir_sub_row_len must be positive");
  if (engine.clock_hz == 0) throw ConfigError("engine.clock_hz must be positive");
  if (memory.weight_gb == 0 || memory.index_sram == 0 || memory.act_gb_a == 0 ||
      memory.act_gb_b == 0 || memory.in_act_buf == 0 ||
      memory.out_act_buf == 0 || memory.instr_words == 0)
    throw ConfigError("memory capacities must be positive");
  if (memory.prep_bandwidth == 0)
    throw ConfigError("memory.prep_bandwidth must be positive");
  adapt.validate();
  if (orchestrator.bpm <= 0) throw ConfigError("orchestrator.bpm must be positive");
  if (energy) {
    const EnergyModel& e = *energy;
    for (double v : {e.pj_per_mac_po2, e.pj_per_mac_int8, e.pj_per_weight_byte,
                     e.pj_per_index_byte, e.pj_per_act_read_byte,
                     e.pj_per_act_write_byte, e.pj_per_offchip_byte})
      if (v < 0.0) throw ConfigError("energy coefficients must be non-negative");
  }
}

RunConfig default_run_config() {
  RunConfig cfg;
  cfg.features.sparsity = true;
  cfg.features.cir = true;
  cfg.features.drir = true;
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read " + path);
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw ConfigError("config parse error: " + std::string(e.what()));
  }
  reject_unknown(j, "config",
                 {"engine", "memory", "features", "adapt", "orchestrator",
                  "energy"});
  RunConfig cfg = default_run_config();
  if (j.contains("engine")) parse_engine(j.at("engine"), cfg.engine);
  if (j.contains("memory")) parse_memory(j.at("memory"), cfg.memory);
  if (j.contains("features")) parse_features(j.at("features"), cfg.features);
  if (j.contains("adapt")) parse_adapt(j.at("adapt"), cfg.adapt);
  if (j.contains("orchestrator"))
    parse_orchestrator(j.at("orchestrator"), cfg.orchestrator);
  if (j.contains("energy") && !j.at("energy").is_null()) {
    EnergyModel e;
    parse_energy(j.at("energy"), e);
    cfg.energy = e;
  }
  cfg.validate();
  return cfg;
}

std::string run_config_to_json(const RunConfig& cfg) {
  json j;
  j["engine"] = {{"lanes", cfg.engine.lanes},
                 {"macs_per_lane_per_cycle", cfg.engine.macs_per_lane_per_cycle},
                 {"drir_sub_row_len", cfg.engine.drir_sub_row_len},
                 {"clock_hz", cfg.engine.clock_hz}};
  j["memory"] = {{"weight_gb", cfg.memory.weight_gb},
                 {"index_sram", cfg.memory.index_sram},
                 {"act_gb_a", cfg.memory.act_gb_a},
                 {"act_gb_b", cfg.memory.act_gb_b},
                 {"in_act_buf", cfg.memory.in_act_buf},
                 {"out_act_buf", cfg.memory.out_act_buf},
                 {"instr_words", cfg.memory.instr_words},
                 {"prep_bandwidth", cfg.memory.prep_bandwidth}};
  j["features"] = {{"sparsity", cfg.features.sparsity},
                   {"cir", cfg.features.cir},
                   {"drir", cfg.features.drir}};
  json adapt = {{"bins", cfg.adapt.bins},
                {"window", cfg.adapt.window},
                {"t_days", cfg.adapt.t_days},
                {"mode", cfg.adapt.mode == WindowMode::Sliding ? "sliding"
                                                               : "tumbling"},
                {"threshold_mode",
                 cfg.adapt.threshold_mode == ThresholdMode::BinMidpoint
                     ? "bin_midpoint"
                     : "sample_mean"}};
  if (cfg.adapt.range)
    adapt["range"] = {cfg.adapt.range->first, cfg.adapt.range->second};
  if (cfg.adapt.sensitive)
    adapt["sensitive"] = {cfg.adapt.sensitive->first, cfg.adapt.sensitive->second};
  j["adapt"] = adapt;
  j["orchestrator"] = {{"bpm", cfg.orchestrator.bpm},
                       {"switch_cycles", cfg.orchestrator.switch_cycles},
                       {"initial_threshold", cfg.orchestrator.initial_threshold},
                       {"refresh_interval", cfg.orchestrator.refresh_interval}};
  if (cfg.energy) {
    j["energy"] = {{"pj_per_mac_po2", cfg.energy->pj_per_mac_po2},
                   {"pj_per_mac_int8", cfg.energy->pj_per_mac_int8},
                   {"pj_per_weight_byte", cfg.energy->pj_per_weight_byte},
                   {"pj_per_index_byte", cfg.energy->pj_per_index_byte},
                   {"pj_per_act_read_byte", cfg.energy->pj_per_act_read_byte},
                   {"pj_per_act_write_byte", cfg.energy->pj_per_act_write_byte},
                   {"pj_per_offchip_byte", cfg.energy->pj_per_offchip_byte}};
  }
  return j.dump(2) + "\n";
}

}  // namespace eg2c
