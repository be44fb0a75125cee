#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "optsmr/command.hpp"
#include "optsmr/history.hpp"
#include "optsmr/multicast.hpp"
#include "optsmr/run_config.hpp"

namespace optsmr {

struct LatencyStats {
  uint64_t count = 0;
  double mean_ms = 0;
  double p50_ms = 0;
  double p99_ms = 0;
};

struct Metrics {
  double throughput_kcps = 0;
  double per_thread_kcps = 0;  // throughput normalized by K
  LatencyStats all, passed, failed;
  double fail_rate = 0;        // failed optimistic / total optimistic
  uint64_t optimistic_total = 0;
  uint64_t optimistic_failed = 0;
  uint64_t issued = 0;
  uint64_t completed = 0;
  uint64_t window_completed = 0;
  double window_s = 0;
  double cpu_usage = 0;        // cores used over the run, best effort
};

struct ClientAccounting {
  uint32_t client_id = 0;
  uint64_t issued = 0;
  uint64_t completed = 0;
};

struct RunResult {
  Metrics metrics;
  bool converged = false;
  std::vector<std::string> digests;        // live replicas, in id order
  std::vector<ClientAccounting> accounting;
  std::vector<HistoryEvent> history;       // only when record_history is set
  std::vector<MulticastKernel::AuditEntry> audit;  // only when audit_log is set
  uint64_t sequenced_messages = 0;
  bool crash_injected = false;
  double throughput_before_crash_kcps = 0;
  double throughput_after_crash_kcps = 0;
};

/// A run made no progress for the watchdog interval and was torn down.
struct WatchdogError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Assembles kernel + engine + preloaded trees per the config, drives
/// closed-loop clients (each issues its next command only after the previous
/// response), and aggregates metrics over the measurement window. Clients
/// draw keys uniformly from [0, M]; the per-client command sequence is a pure
/// function of (seed, client_id).
RunResult run_workload(EngineMode mode, const RunConfig& cfg);

/// The deterministic command sequence client `client_id` would issue; test
/// and reproducibility support.
struct PlannedCommand {
  CommandKind kind;
  uint64_t key;
  std::string value;  // empty when the kind carries no value
};
std::vector<PlannedCommand> planned_commands(const RunConfig& cfg, uint32_t client_id,
                                             uint64_t count);

}  // namespace optsmr
