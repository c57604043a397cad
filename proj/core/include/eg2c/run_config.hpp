#pragma once

#include <optional>
#include <string>

#include "eg2c/adaptation.hpp"
#include "eg2c/dataflow.hpp"
#include "eg2c/memory.hpp"
#include "eg2c/orchestrator.hpp"
#include "eg2c/simulator.hpp"

namespace eg2c {

// Everything a run needs, loadable from JSON. Unknown keys are rejected
// so typos fail loudly instead of silently running defaults.
struct RunConfig {
  EngineConfig engine;
  MemoryConfig memory;
  DataflowFlags features;
  AdaptConfig adapt;
  OrchestratorConfig orchestrator;
  std::optional<EnergyModel> energy;

  void validate() const;  // throws ConfigError
};

RunConfig default_run_config();
RunConfig load_run_config(const std::string& path);
std::string run_config_to_json(const RunConfig& cfg);

}  // namespace eg2c
