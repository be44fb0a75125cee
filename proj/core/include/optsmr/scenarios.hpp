#pragma once

#include <map>
#include <string>
#include <vector>

#include "optsmr/run_config.hpp"
#include "optsmr/workload.hpp"

namespace optsmr {

struct ScenarioPoint {
  EngineMode mode = EngineMode::OptPSMR;
  unsigned threads = 0;
  unsigned clients = 0;
  unsigned dependent_pct = 0;
  uint64_t preload = 0;
  uint64_t seed = 0;
  Metrics metrics;
  std::string label;  // free-form point tag ("pre-crash", "load=4", ...)
};

struct ScenarioReport {
  std::string name;
  std::vector<ScenarioPoint> points;
  std::map<std::string, double> summary;  // scenario-level derived figures
  std::string csv_path;                   // set by write_report_files
  std::string json_path;
};

/// Dependent-only workload at three offered-load levels with the
/// client-resubmission failed path and a nonzero per-hop transport delay;
/// reports failed vs passed latency and fail rate per load point.
ScenarioReport scenario_fail_cost(RunConfig base);

/// Sweeps the structural-command share {0,1,5,10,25,50,75,100}% for all
/// three engines at fixed K.
ScenarioReport scenario_dependent_sweep(RunConfig base);

/// Dependent-only workload across K in {1,2,4,8} for the two parallel
/// engines; reports absolute and per-thread-normalized throughput.
ScenarioReport scenario_thread_sweep(RunConfig base);

/// Two-replica run with one replica crashed mid-window; checks that every
/// issued command is answered and reports the throughput dip.
ScenarioReport scenario_crash(RunConfig base);

/// Writes `<name>_<mode|all>_K<k>_<mixtag>_seed<seed>.csv` and the matching
/// `.json` summary under cfg.out_dir, filling the report's path fields.
void write_report_files(ScenarioReport& report, const RunConfig& cfg);

ScenarioReport run_scenario(const std::string& name, RunConfig base);
std::vector<std::string> scenario_names();

}  // namespace optsmr
