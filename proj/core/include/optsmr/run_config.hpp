#pragma once

#include <cstdint>
#include <string>

#include "optsmr/command.hpp"
#include "optsmr/engine.hpp"
#include "optsmr/routing.hpp"

namespace optsmr {

/// Workload mix as percentages over the four command kinds; must sum to 100.
struct Mix {
  unsigned read = 50;
  unsigned update = 0;
  unsigned insert = 25;
  unsigned del = 25;

  unsigned sum() const { return read + update + insert + del; }
  unsigned dependent_pct() const { return insert + del; }
  std::string tag() const;  // "r50u0i25d25"
};

/// Everything needed to assemble one run: deployment shape, service sizing,
/// workload, failure handling, and output plumbing. Defaults are sensible;
/// validate_and_normalize() enforces the cross-field invariants.
struct RunConfig {
  EngineMode mode = EngineMode::OptPSMR;
  unsigned threads = 8;    // K; SequentialSMR coerces this to 1
  unsigned replicas = 2;   // n; f = n - 1 crash faults tolerated
  uint64_t max_key = 1'000'000;
  uint64_t preload = 100'000;
  unsigned fanout = 64;
  Mix mix;
  unsigned clients = 8;
  double duration_s = 0;   // 0: run a fixed command count instead
  double discard_s = 0;    // warmup/cooldown discarded from the window
  uint64_t ops = 20'000;   // total commands when count-based
  uint64_t seed = 42;
  FailedPath failed_path = FailedPath::Remulticast;
  uint32_t transport_delay_us = 0;
  uint32_t exec_spin_us = 0;
  uint32_t exec_sleep_us = 0;
  size_t stream_capacity = 65536;
  bool audit_log = false;
  bool record_history = false;
  double watchdog_s = 10.0;
  std::string out_dir = "out";
  bool inject_crash = false;  // crash replicas mid-run, highest ids first
  unsigned crash_replicas = 1;
  double crash_at_s = 0;      // offset into the run; 0 = half the duration
  uint64_t checker_budget = 2'000'000;

  unsigned tolerated() const { return replicas - 1; }
  RoutingConfig routing() const;

  /// Applies mode coercions (SequentialSMR -> K=1) and throws
  /// std::invalid_argument on inconsistent settings.
  void validate_and_normalize();
};

}  // namespace optsmr
