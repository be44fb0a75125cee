#include "optsmr/verify_cases.hpp"

#include <algorithm>
#include <sstream>
#include <thread>

#include "optsmr/client.hpp"
#include "optsmr/engine.hpp"
#include "optsmr/linearizability.hpp"
#include "optsmr/service.hpp"

namespace optsmr {

namespace {

// Two threads, two replicas, fanout 4, key space [0, 1000]. The preload
// splits the root leaf exactly at the partition boundary 500, so the left
// leaf covers [0,499] inside partition 0 and the right leaf covers
// [500,1000] inside partition 1.
constexpr uint64_t kMaxKey = 1000;
constexpr unsigned kThreads = 2;

struct CaseRig {
  MulticastKernel kernel;
  ResponseBus bus;
  std::unique_ptr<ReplicaSet> rs;
  HistoryLog history;

  explicit CaseRig(const std::vector<uint64_t>& preload_keys)
      : kernel(KernelConfig{kThreads, 65536, false}), bus(2) {
    EngineConfig ecfg;
    ecfg.mode = EngineMode::OptPSMR;
    ecfg.routing = RoutingConfig{kThreads, kMaxKey, 2, 1};
    ecfg.failed_path = FailedPath::Remulticast;
    ecfg.record_journal = true;
    ServiceFactory factory = [&preload_keys]() -> std::unique_ptr<Service> {
      auto svc = std::make_unique<BTreeService>(BTreeConfig{4, kMaxKey},
                                                PartitionMap(kThreads, kMaxKey));
      for (uint64_t k : preload_keys) svc->tree().insert(k, "s" + std::to_string(k));
      return svc;
    };
    rs = engine_run(ecfg, kernel, bus, factory);
  }

  ClientProxy proxy(uint32_t id) {
    return ClientProxy(id, EngineMode::OptPSMR, RoutingConfig{kThreads, kMaxKey, 2, 1},
                       kernel, bus, FailedPath::Remulticast, &history);
  }
};

struct CaseCheck {
  bool ok = true;
  std::ostringstream detail;

  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << (detail.str().empty() ? "" : "; ") << what;
    }
  }
};

size_t executions_of(const std::vector<JournalEntry>& j, CmdId id, Mode mode) {
  return size_t(std::count_if(j.begin(), j.end(), [&](const JournalEntry& e) {
    return e.cmd == id && e.mode == mode;
  }));
}

CaseOutcome run_two_command_case(const std::string& name,
                                 const std::vector<uint64_t>& preload,
                                 CommandKind kx, uint64_t key_x, CommandKind ky,
                                 uint64_t key_y, bool expect_x_fails,
                                 bool expect_y_fails, bool y_checked) {
  CaseRig rig(preload);
  CaseCheck chk;

  InvokeResult rx, ry;
  std::thread tx([&] {
    auto p = rig.proxy(0);
    rx = p.invoke(kx, key_x, kx == CommandKind::Read ? std::optional<std::string>{}
                                                     : std::optional<std::string>{"xval"});
  });
  std::thread ty([&] {
    auto p = rig.proxy(1);
    ry = p.invoke(ky, key_y, ky == CommandKind::Read ? std::optional<std::string>{}
                                                     : std::optional<std::string>{"yval"});
  });
  tx.join();
  ty.join();

  chk.expect(rig.rs->await_quiescence(5.0), "run did not quiesce");

  CmdId cx{0, 1}, cy{1, 1};
  for (unsigned r = 0; r < 2; ++r) {
    auto journal = rig.rs->replica(r).journal();
    Mode mx = expect_x_fails ? Mode::Conservative : Mode::Optimistic;
    Mode my = expect_y_fails ? Mode::Conservative : Mode::Optimistic;
    if (!y_checked) my = Mode::Conservative;  // reads are never optimistic
    char buf[160];
    snprintf(buf, sizeof buf, "replica %u: command x executed once as %s", r,
             mx == Mode::Conservative ? "conservative" : "optimistic");
    chk.expect(executions_of(journal, cx, mx) == 1 &&
                   executions_of(journal, cx, mx == Mode::Optimistic
                                                  ? Mode::Conservative
                                                  : Mode::Optimistic) == 0,
               buf);
    snprintf(buf, sizeof buf, "replica %u: command y executed once as %s", r,
             my == Mode::Conservative ? "conservative" : "optimistic");
    chk.expect(executions_of(journal, cy, my) == 1 &&
                   executions_of(journal, cy, my == Mode::Optimistic
                                                  ? Mode::Conservative
                                                  : Mode::Optimistic) == 0,
               buf);
    unsigned expected_fails = (expect_x_fails ? 1 : 0) + (expect_y_fails ? 1 : 0);
    chk.expect(rig.rs->replica(r).failed_checks() == expected_fails,
               "unexpected safety-check fail count");
    chk.expect(rig.rs->replica(r).overlap_violations() == 0,
               "synchronous-mode exclusivity violated");
  }

  chk.expect(check_convergence(rig.rs->live_digests()), "replicas diverged");
  auto lin = check_linearizable(rig.history.snapshot());
  chk.expect(lin.ok(), "history not linearizable");

  rig.rs->stop();
  rig.bus.close();
  return CaseOutcome{name, chk.ok, chk.ok ? "ok" : chk.detail.str()};
}

}  // namespace

std::vector<CaseOutcome> case_suite_44() {
  std::vector<CaseOutcome> out;
  // Base preload: left leaf [10,20] covering [0,499], right leaf
  // [500,510,520] covering [500,1000].
  const std::vector<uint64_t> base{10, 20, 500, 510, 520};
  // Right leaf full.
  const std::vector<uint64_t> right_full{10, 20, 500, 510, 520, 530};
  // Both leaves full.
  const std::vector<uint64_t> both_full{10, 20, 500, 510, 520, 530, 30, 40};

  out.push_back(run_two_command_case("a1-both-pass", base, CommandKind::Insert, 100,
                                     CommandKind::Insert, 600, false, false, true));
  out.push_back(run_two_command_case("a2-one-fails", right_full, CommandKind::Insert, 100,
                                     CommandKind::Insert, 601, false, true, true));
  out.push_back(run_two_command_case("a3-both-fail", both_full, CommandKind::Insert, 101,
                                     CommandKind::Insert, 601, true, true, true));
  out.push_back(run_two_command_case("b-one-checked", base, CommandKind::Insert, 100,
                                     CommandKind::Read, 510, false, false, false));
  return out;
}

}  // namespace optsmr
