#include <doctest.h>


#include <map>
#include "optsmr/workload.hpp"

using namespace optsmr;

namespace {

RunConfig small_cfg() {
  RunConfig cfg;
  cfg.threads = 2;
  cfg.clients = 3;
  cfg.ops = 900;
  cfg.preload = 500;
  cfg.max_key = 50'000;
  cfg.fanout = 8;
  cfg.seed = 11;
  return cfg;
}

}  // namespace

TEST_CASE("command planning is a pure function of seed and client") {
  RunConfig cfg = small_cfg();
  auto a = planned_commands(cfg, 1, 200);
  auto b = planned_commands(cfg, 1, 200);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].kind == b[i].kind);
    CHECK(a[i].key == b[i].key);
    CHECK(a[i].value == b[i].value);
  }
  auto other_client = planned_commands(cfg, 2, 200);
  bool differs = false;
  for (size_t i = 0; i < a.size(); ++i) differs |= a[i].key != other_client[i].key;
  CHECK(differs);
}

TEST_CASE("identical runs issue identical per-client command sequences") {
  RunConfig cfg = small_cfg();
  cfg.record_history = true;
  auto first = run_workload(EngineMode::OptPSMR, cfg);
  auto second = run_workload(EngineMode::OptPSMR, cfg);
  REQUIRE(first.accounting.size() == second.accounting.size());
  for (size_t c = 0; c < first.accounting.size(); ++c) {
    CHECK(first.accounting[c].issued == second.accounting[c].issued);
    CHECK(first.accounting[c].completed == second.accounting[c].completed);
  }
  auto project = [](const std::vector<HistoryEvent>& evs) {
    // per-client invocation sequences, timestamps stripped
    std::map<uint32_t, std::vector<std::string>> out;
    for (const auto& e : evs) {
      if (e.kind != EventKind::Invoke) continue;
      out[e.client_id].push_back(std::to_string(uint64_t(e.command)) + ":" +
                                 std::to_string(e.key) + ":" + e.arg.value_or(""));
    }
    return out;
  };
  CHECK(project(first.history) == project(second.history));
}

TEST_CASE("closed-loop accounting balances") {
  RunConfig cfg = small_cfg();
  auto r = run_workload(EngineMode::PSMR, cfg);
  REQUIRE(r.accounting.size() == cfg.clients);
  uint64_t issued = 0;
  for (const auto& a : r.accounting) {
    CHECK(a.issued == a.completed);  // count-based run finishes its quota
    issued += a.issued;
  }
  CHECK(issued == cfg.ops);
  CHECK(r.metrics.issued == cfg.ops);
  CHECK(r.metrics.completed == cfg.ops);
  CHECK(r.converged);
}

TEST_CASE("read-only workloads never consult the safety check") {
  RunConfig cfg = small_cfg();
  cfg.mix = Mix{100, 0, 0, 0};
  auto r = run_workload(EngineMode::OptPSMR, cfg);
  CHECK(r.metrics.optimistic_total == 0);
  CHECK(r.metrics.fail_rate == 0.0);
}

TEST_CASE("structural-only workloads are optimistically multicast end to end") {
  RunConfig cfg = small_cfg();
  cfg.mix = Mix{0, 0, 50, 50};
  auto r = run_workload(EngineMode::OptPSMR, cfg);
  CHECK(r.metrics.optimistic_total == r.metrics.completed);
  CHECK(r.metrics.optimistic_failed + r.metrics.passed.count == r.metrics.optimistic_total);
  CHECK(r.metrics.fail_rate >= 0.0);
  CHECK(r.metrics.fail_rate <= 1.0);
  CHECK(r.converged);
}

TEST_CASE("metrics windows honor the discard interval") {
  RunConfig cfg = small_cfg();
  cfg.ops = 0;
  cfg.duration_s = 0.6;
  cfg.discard_s = 0.2;
  auto r = run_workload(EngineMode::OptPSMR, cfg);
  CHECK(r.metrics.window_s == doctest::Approx(0.2).epsilon(0.5));
  CHECK(r.metrics.completed >= r.metrics.window_completed);
}

TEST_CASE("config validation catches bad setups") {
  RunConfig cfg = small_cfg();
  cfg.mix = Mix{50, 0, 0, 0};  // sums to 50
  CHECK_THROWS_AS(cfg.validate_and_normalize(), std::invalid_argument);

  cfg = small_cfg();
  cfg.duration_s = 1.0;
  cfg.discard_s = 0.5;  // duration must exceed twice the discard
  CHECK_THROWS_AS(cfg.validate_and_normalize(), std::invalid_argument);

  cfg = small_cfg();
  cfg.mode = EngineMode::SequentialSMR;
  cfg.threads = 8;
  cfg.validate_and_normalize();
  CHECK(cfg.threads == 1);  // coerced

  cfg = small_cfg();
  cfg.preload = cfg.max_key + 1;
  CHECK_THROWS_AS(cfg.validate_and_normalize(), std::invalid_argument);
}

TEST_CASE("crashing every replica trips the watchdog") {
  RunConfig cfg = small_cfg();
  cfg.ops = 0;
  cfg.duration_s = 30;  // would run far longer than the watchdog allows
  cfg.discard_s = 0;
  cfg.inject_crash = true;
  cfg.crash_replicas = 2;
  cfg.crash_at_s = 0.1;
  cfg.watchdog_s = 0.5;
  CHECK_THROWS_AS(run_workload(EngineMode::OptPSMR, cfg), WatchdogError);
}

TEST_CASE("single-replica crash is absorbed") {
  RunConfig cfg = small_cfg();
  cfg.ops = 0;
  cfg.duration_s = 0.8;
  cfg.discard_s = 0;
  cfg.inject_crash = true;
  cfg.crash_at_s = 0.3;
  auto r = run_workload(EngineMode::OptPSMR, cfg);
  CHECK(r.crash_injected);
  CHECK(r.digests.size() == 1);
  CHECK(r.converged);
  for (const auto& a : r.accounting) CHECK(a.issued == a.completed);
}
