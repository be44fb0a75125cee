#include "optsmr/workload.hpp"

#include <sys/resource.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <random>
#include <thread>

#include "optsmr/client.hpp"
#include "optsmr/engine.hpp"
#include "optsmr/linearizability.hpp"

namespace optsmr {

namespace {

// Deterministic per-client command source; the bench clients and the
// reproducibility check share this exact generator.
class CommandPlanner {
public:
  CommandPlanner(const RunConfig& cfg, uint32_t client_id)
      : rng_(cfg.seed * 0x100000001b3ULL + client_id + 1),
        key_dist_(0, cfg.max_key),
        pct_dist_(0, 99),
        mix_(cfg.mix) {}

  PlannedCommand next() {
    PlannedCommand c;
    unsigned p = pct_dist_(rng_);
    if (p < mix_.read)
      c.kind = CommandKind::Read;
    else if (p < mix_.read + mix_.update)
      c.kind = CommandKind::Update;
    else if (p < mix_.read + mix_.update + mix_.insert)
      c.kind = CommandKind::Insert;
    else
      c.kind = CommandKind::Delete;
    c.key = key_dist_(rng_);
    if (c.kind == CommandKind::Update || c.kind == CommandKind::Insert) {
      static const char alphabet[] = "abcdefghijklmnopqrstuvwxyz0123456789";
      c.value.resize(8);
      for (auto& ch : c.value) ch = alphabet[rng_() % (sizeof(alphabet) - 1)];
    }
    return c;
  }

private:
  std::mt19937_64 rng_;
  std::uniform_int_distribution<uint64_t> key_dist_;
  std::uniform_int_distribution<unsigned> pct_dist_;
  Mix mix_;
};

struct CmdRecord {
  uint64_t invoke_ns;
  uint64_t respond_ns;
  bool optimistic;
  bool failed;
};

LatencyStats latency_stats(std::vector<uint64_t>& ns) {
  LatencyStats s;
  s.count = ns.size();
  if (ns.empty()) return s;
  std::sort(ns.begin(), ns.end());
  double sum = 0;
  for (uint64_t v : ns) sum += double(v);
  s.mean_ms = sum / double(ns.size()) / 1e6;
  s.p50_ms = double(ns[ns.size() / 2]) / 1e6;
  s.p99_ms = double(ns[size_t(double(ns.size() - 1) * 0.99)]) / 1e6;
  return s;
}

double cpu_seconds() {
  rusage ru{};
  getrusage(RUSAGE_SELF, &ru);
  auto tv = [](const timeval& t) { return double(t.tv_sec) + double(t.tv_usec) / 1e6; };
  return tv(ru.ru_utime) + tv(ru.ru_stime);
}

}  // namespace

std::vector<PlannedCommand> planned_commands(const RunConfig& cfg, uint32_t client_id,
                                             uint64_t count) {
  CommandPlanner planner(cfg, client_id);
  std::vector<PlannedCommand> out;
  out.reserve(count);
  for (uint64_t i = 0; i < count; ++i) out.push_back(planner.next());
  return out;
}

RunResult run_workload(EngineMode mode, const RunConfig& cfg_in) {
  RunConfig cfg = cfg_in;
  cfg.mode = mode;
  cfg.validate_and_normalize();

  KernelConfig kcfg;
  kcfg.groups = cfg.threads;
  kcfg.stream_capacity = cfg.stream_capacity;
  kcfg.keep_audit_log = cfg.audit_log;
  MulticastKernel kernel(kcfg);
  ResponseBus bus(cfg.clients);

  BTreeConfig tcfg{cfg.fanout, cfg.max_key};
  PartitionMap partitions(cfg.threads, cfg.max_key);
  ExecCost cost{cfg.exec_spin_us, cfg.exec_sleep_us};
  ServiceFactory factory = [&]() -> std::unique_ptr<Service> {
    auto svc = std::make_unique<BTreeService>(tcfg, partitions, cost);
    preload_tree(svc->tree(), cfg.preload, cfg.max_key, cfg.seed);
    return svc;
  };

  EngineConfig ecfg;
  ecfg.mode = mode;
  ecfg.routing = cfg.routing();
  ecfg.failed_path = cfg.failed_path;
  auto rs = engine_run(ecfg, kernel, bus, factory);

  HistoryLog history;
  HistoryLog* history_ptr = cfg.record_history ? &history : nullptr;

  const bool timed = cfg.duration_s > 0;
  const uint64_t per_client = timed ? 0 : cfg.ops / cfg.clients;
  const uint64_t extra = timed ? 0 : cfg.ops % cfg.clients;

  std::atomic<bool> stop{false};
  std::atomic<bool> aborted{false};
  std::atomic<uint64_t> progress{0};
  std::vector<std::vector<CmdRecord>> records(cfg.clients);
  std::vector<ClientAccounting> accounting(cfg.clients);

  double cpu0 = cpu_seconds();
  uint64_t t_start = now_ns();
  uint64_t crash_ns = 0;

  std::vector<std::thread> clients;
  clients.reserve(cfg.clients);
  for (uint32_t c = 0; c < cfg.clients; ++c) {
    clients.emplace_back([&, c] {
      CommandPlanner planner(cfg, c);
      ClientProxy proxy(c, mode, cfg.routing(), kernel, bus, cfg.failed_path, history_ptr,
                        cfg.transport_delay_us);
      auto deadline = std::chrono::steady_clock::now() +
                      std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                          std::chrono::duration<double>(cfg.duration_s));
      uint64_t quota = per_client + (c < extra ? 1 : 0);
      auto& rec = records[c];
      auto& acct = accounting[c];
      acct.client_id = c;
      try {
        for (;;) {
          if (timed) {
            if (stop.load(std::memory_order_relaxed) ||
                std::chrono::steady_clock::now() >= deadline)
              break;
          } else if (acct.issued >= quota) {
            break;
          }
          PlannedCommand pc = planner.next();
          ++acct.issued;
          std::optional<std::string> value;
          if (pc.kind == CommandKind::Update || pc.kind == CommandKind::Insert)
            value = pc.value;
          InvokeResult r = proxy.invoke(pc.kind, pc.key, std::move(value));
          ++acct.completed;
          progress.fetch_add(1, std::memory_order_relaxed);
          rec.push_back(CmdRecord{r.invoke_ns, r.respond_ns, r.optimistic, r.failed_check});
        }
      } catch (const ClientProxy::EngineStopped&) {
        // torn down underneath us (watchdog or crash of every replica)
      }
    });
  }

  // Watchdog: a run that stops making progress gets torn down, not hung.
  std::thread watchdog([&] {
    uint64_t last = 0;
    auto last_change = std::chrono::steady_clock::now();
    while (!stop.load(std::memory_order_relaxed)) {
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
      uint64_t cur = progress.load(std::memory_order_relaxed);
      auto now = std::chrono::steady_clock::now();
      if (cur != last) {
        last = cur;
        last_change = now;
      } else if (std::chrono::duration<double>(now - last_change).count() > cfg.watchdog_s) {
        aborted.store(true);
        stop.store(true);
        kernel.shutdown();
        bus.close();
        return;
      }
    }
  });

  std::thread crasher;
  if (cfg.inject_crash && cfg.replicas >= 2) {
    double at = cfg.crash_at_s > 0 ? cfg.crash_at_s
                                   : (timed ? cfg.duration_s / 2 : 0.5);
    crasher = std::thread([&, at] {
      auto until = std::chrono::steady_clock::now() +
                   std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                       std::chrono::duration<double>(at));
      while (std::chrono::steady_clock::now() < until) {
        if (stop.load(std::memory_order_relaxed)) return;
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
      }
      crash_ns = now_ns();
      unsigned count = cfg.crash_replicas > cfg.replicas ? cfg.replicas : cfg.crash_replicas;
      for (unsigned i = 0; i < count; ++i) rs->crash(ReplicaId(cfg.replicas - 1 - i));
    });
  }

  for (auto& t : clients) t.join();
  uint64_t t_end = now_ns();
  stop.store(true);
  watchdog.join();
  if (crasher.joinable()) crasher.join();

  if (aborted.load()) {
    rs->stop();
    throw WatchdogError("no progress for " + std::to_string(cfg.watchdog_s) +
                        " s; run aborted");
  }

  RunResult out;
  out.crash_injected = crash_ns != 0;

  // Let every live replica finish delivering before reading state.
  rs->await_quiescence(10.0);
  out.digests = rs->live_digests();
  out.converged = check_convergence(out.digests);
  out.sequenced_messages = kernel.sequenced_count();
  if (cfg.audit_log) out.audit = kernel.audit_log();
  rs->stop();
  bus.close();

  // ---- aggregate metrics over the measurement window
  uint64_t win_lo = timed ? t_start + uint64_t(cfg.discard_s * 1e9) : 0;
  uint64_t win_hi = timed ? t_end - uint64_t(cfg.discard_s * 1e9) : ~uint64_t(0);
  Metrics& m = out.metrics;
  std::vector<uint64_t> lat_all, lat_passed, lat_failed;
  uint64_t before = 0, after = 0;
  for (auto& rec : records) {
    for (const auto& r : rec) {
      ++m.completed;
      if (crash_ns) (r.respond_ns < crash_ns ? before : after) += 1;
      if (r.respond_ns < win_lo || r.respond_ns > win_hi) continue;
      ++m.window_completed;
      uint64_t lat = r.respond_ns - r.invoke_ns;
      lat_all.push_back(lat);
      if (r.optimistic) {
        ++m.optimistic_total;
        if (r.failed) {
          ++m.optimistic_failed;
          lat_failed.push_back(lat);
        } else {
          lat_passed.push_back(lat);
        }
      }
    }
  }
  for (const auto& a : accounting) m.issued += a.issued;
  m.window_s = timed ? (double(t_end - t_start) / 1e9 - 2 * cfg.discard_s)
                     : double(t_end - t_start) / 1e9;
  if (m.window_s <= 0) m.window_s = double(t_end - t_start) / 1e9;
  m.throughput_kcps = double(m.window_completed) / m.window_s / 1000.0;
  m.per_thread_kcps = m.throughput_kcps / double(cfg.threads);
  m.all = latency_stats(lat_all);
  m.passed = latency_stats(lat_passed);
  m.failed = latency_stats(lat_failed);
  m.fail_rate = m.optimistic_total
                    ? double(m.optimistic_failed) / double(m.optimistic_total)
                    : 0.0;
  m.cpu_usage = (cpu_seconds() - cpu0) / (double(t_end - t_start) / 1e9);

  if (crash_ns) {
    double span_before = double(crash_ns - t_start) / 1e9;
    double span_after = double(t_end - crash_ns) / 1e9;
    if (span_before > 0) out.throughput_before_crash_kcps = double(before) / span_before / 1000.0;
    if (span_after > 0) out.throughput_after_crash_kcps = double(after) / span_after / 1000.0;
  }

  out.accounting = std::move(accounting);
  if (cfg.record_history) out.history = history.snapshot();
  return out;
}

}  // namespace optsmr
