#include "optsmr/scenarios.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace optsmr {

namespace {

ScenarioPoint make_point(const std::string& label, EngineMode mode, const RunConfig& cfg,
                         const Metrics& m) {
  ScenarioPoint p;
  p.mode = mode;
  p.threads = cfg.threads;
  p.clients = cfg.clients;
  p.dependent_pct = cfg.mix.dependent_pct();
  p.preload = cfg.preload;
  p.seed = cfg.seed;
  p.metrics = m;
  p.label = label;
  return p;
}

}  // namespace

ScenarioReport scenario_fail_cost(RunConfig base) {
  // Dependent-only workload measured on the client-resubmission path with a
  // synthetic per-hop delay, so a failed command pays two client-server
  // traversals. Offered load is swept by client count; higher load grows the
  // tree further inside the window, which lowers the fail rate.
  RunConfig cfg = base;
  cfg.mode = EngineMode::OptPSMR;
  cfg.threads = 8;
  cfg.fanout = base.fanout;
  cfg.mix = Mix{0, 0, 50, 50};
  cfg.preload = 5000;
  cfg.max_key = 1'000'000;
  cfg.failed_path = FailedPath::ClientResubmit;
  if (cfg.transport_delay_us == 0) cfg.transport_delay_us = 150;
  cfg.exec_spin_us = 0;
  cfg.exec_sleep_us = 0;
  if (cfg.duration_s <= 0) {
    cfg.duration_s = 3.0;
    cfg.discard_s = 0.5;
  }
  cfg.ops = 0;

  ScenarioReport rep;
  rep.name = "fail-cost";
  double ratio_weighted = 0, weight = 0;
  for (unsigned clients : {1u, 4u, 16u}) {
    RunConfig point_cfg = cfg;
    point_cfg.clients = clients;
    RunResult r = run_workload(EngineMode::OptPSMR, point_cfg);
    rep.points.push_back(
        make_point("clients=" + std::to_string(clients), EngineMode::OptPSMR, point_cfg,
                   r.metrics));
    if (r.metrics.failed.count > 0 && r.metrics.passed.count > 0) {
      double w = double(r.metrics.failed.count);
      ratio_weighted += w * (r.metrics.failed.mean_ms / r.metrics.passed.mean_ms);
      weight += w;
    }
  }
  if (weight > 0) rep.summary["fail_latency_ratio"] = ratio_weighted / weight;
  if (rep.points.size() >= 2) {
    bool decreasing = true;
    for (size_t i = 1; i < rep.points.size(); ++i)
      decreasing &= rep.points[i].metrics.fail_rate < rep.points[i - 1].metrics.fail_rate;
    rep.summary["fail_rate_decreasing"] = decreasing ? 1 : 0;
  }
  return rep;
}

ScenarioReport scenario_dependent_sweep(RunConfig base) {
  // Structural share sweep for the three engines at fixed K. The synthetic
  // sleep-based execution cost keeps worker throughput off the core count,
  // so the shapes survive a small machine.
  RunConfig cfg = base;
  cfg.threads = 8;
  cfg.max_key = 1'000'000;
  cfg.preload = 30'000;
  cfg.failed_path = FailedPath::Remulticast;
  cfg.transport_delay_us = 0;
  cfg.exec_spin_us = 0;
  if (cfg.exec_sleep_us == 0) cfg.exec_sleep_us = 100;
  cfg.clients = 32;
  if (cfg.duration_s <= 0) {
    cfg.duration_s = 1.5;
    cfg.discard_s = 0.25;
  }
  cfg.ops = 0;

  ScenarioReport rep;
  rep.name = "dependent-sweep";
  const unsigned shares[] = {0, 1, 5, 10, 25, 50, 75, 100};
  for (EngineMode mode :
       {EngineMode::SequentialSMR, EngineMode::PSMR, EngineMode::OptPSMR}) {
    for (unsigned dep : shares) {
      RunConfig point_cfg = cfg;
      point_cfg.mode = mode;
      point_cfg.mix = Mix{100 - dep, 0, dep / 2, dep - dep / 2};
      RunResult r = run_workload(mode, point_cfg);
      rep.points.push_back(make_point("dep=" + std::to_string(dep), mode, point_cfg,
                                      r.metrics));
    }
  }

  auto throughput_at = [&](EngineMode mode, unsigned dep) -> double {
    for (const auto& p : rep.points)
      if (p.mode == mode && p.dependent_pct == dep) return p.metrics.throughput_kcps;
    return 0;
  };
  double opt100 = throughput_at(EngineMode::OptPSMR, 100);
  double psmr100 = throughput_at(EngineMode::PSMR, 100);
  if (psmr100 > 0) rep.summary["opt_over_psmr_at_100"] = opt100 / psmr100;
  rep.summary["paper_reference_opt_over_psmr"] = 2.4;
  return rep;
}

ScenarioReport scenario_thread_sweep(RunConfig base) {
  RunConfig cfg = base;
  cfg.mix = Mix{0, 0, 50, 50};
  cfg.max_key = 1'000'000;
  cfg.preload = 30'000;
  cfg.failed_path = FailedPath::Remulticast;
  cfg.transport_delay_us = 0;
  cfg.exec_spin_us = 0;
  if (cfg.exec_sleep_us == 0) cfg.exec_sleep_us = 100;
  cfg.clients = 32;
  if (cfg.duration_s <= 0) {
    cfg.duration_s = 1.5;
    cfg.discard_s = 0.25;
  }
  cfg.ops = 0;

  ScenarioReport rep;
  rep.name = "thread-sweep";
  for (EngineMode mode : {EngineMode::PSMR, EngineMode::OptPSMR}) {
    for (unsigned k : {1u, 2u, 4u, 8u}) {
      RunConfig point_cfg = cfg;
      point_cfg.mode = mode;
      point_cfg.threads = k;
      RunResult r = run_workload(mode, point_cfg);
      rep.points.push_back(make_point("K=" + std::to_string(k), mode, point_cfg, r.metrics));
    }
  }
  return rep;
}

ScenarioReport scenario_crash(RunConfig base) {
  RunConfig cfg = base;
  cfg.mode = EngineMode::OptPSMR;
  cfg.replicas = 2;
  cfg.inject_crash = true;
  if (cfg.duration_s <= 0) {
    cfg.duration_s = 2.0;
    cfg.discard_s = 0;
  }
  cfg.ops = 0;
  if (cfg.crash_at_s <= 0) cfg.crash_at_s = cfg.duration_s / 2;

  RunResult r = run_workload(cfg.mode, cfg);

  ScenarioReport rep;
  rep.name = "crash";
  rep.points.push_back(make_point("pre+post-crash", cfg.mode, cfg, r.metrics));
  uint64_t unanswered = 0;
  for (const auto& a : r.accounting) unanswered += a.issued - a.completed;
  rep.summary["crash_injected"] = r.crash_injected ? 1 : 0;
  rep.summary["unanswered_commands"] = double(unanswered);
  rep.summary["survivor_converged"] = r.converged ? 1 : 0;
  rep.summary["live_replicas"] = double(r.digests.size());
  rep.summary["throughput_before_crash_kcps"] = r.throughput_before_crash_kcps;
  rep.summary["throughput_after_crash_kcps"] = r.throughput_after_crash_kcps;
  return rep;
}

void write_report_files(ScenarioReport& report, const RunConfig& cfg) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);

  bool multi_mode = false;
  for (const auto& p : report.points)
    if (p.mode != report.points.front().mode) multi_mode = true;
  std::string mode_tag =
      report.points.empty() || multi_mode ? "all" : engine_mode_name(report.points[0].mode);

  std::ostringstream stem;
  stem << report.name << "_" << mode_tag << "_K" << cfg.threads << "_" << cfg.mix.tag()
       << "_seed" << cfg.seed;
  fs::path csv = fs::path(cfg.out_dir) / (stem.str() + ".csv");
  fs::path json_path = fs::path(cfg.out_dir) / (stem.str() + ".json");

  std::ofstream out(csv);
  if (!out) throw std::runtime_error("cannot write " + csv.string());
  out << "scenario,mode,threads,clients,dependent_pct,preload,seed,label,"
         "throughput_kcps,per_thread_kcps,"
         "latency_all_mean_ms,latency_all_p50_ms,latency_all_p99_ms,"
         "latency_passed_mean_ms,latency_failed_mean_ms,fail_rate,"
         "optimistic_total,optimistic_failed,issued,completed,window_s,cpu_usage\n";
  for (const auto& p : report.points) {
    const Metrics& m = p.metrics;
    out << report.name << ',' << engine_mode_name(p.mode) << ',' << p.threads << ','
        << p.clients << ',' << p.dependent_pct << ',' << p.preload << ',' << p.seed << ','
        << p.label << ',' << m.throughput_kcps << ',' << m.per_thread_kcps << ','
        << m.all.mean_ms << ',' << m.all.p50_ms << ',' << m.all.p99_ms << ','
        << m.passed.mean_ms << ',' << m.failed.mean_ms << ',' << m.fail_rate << ','
        << m.optimistic_total << ',' << m.optimistic_failed << ',' << m.issued << ','
        << m.completed << ',' << m.window_s << ',' << m.cpu_usage << '\n';
  }
  out.close();

  nlohmann::json j;
  j["scenario"] = report.name;
  j["seed"] = cfg.seed;
  j["config"] = {{"threads", cfg.threads},
                 {"replicas", cfg.replicas},
                 {"max_key", cfg.max_key},
                 {"preload", cfg.preload},
                 {"fanout", cfg.fanout},
                 {"clients", cfg.clients},
                 {"duration_s", cfg.duration_s},
                 {"discard_s", cfg.discard_s},
                 {"transport_delay_us", cfg.transport_delay_us},
                 {"exec_sleep_us", cfg.exec_sleep_us},
                 {"exec_spin_us", cfg.exec_spin_us}};
  j["summary"] = report.summary;
  j["points"] = nlohmann::json::array();
  for (const auto& p : report.points) {
    const Metrics& m = p.metrics;
    j["points"].push_back({{"mode", engine_mode_name(p.mode)},
                           {"threads", p.threads},
                           {"clients", p.clients},
                           {"dependent_pct", p.dependent_pct},
                           {"preload", p.preload},
                           {"label", p.label},
                           {"throughput_kcps", m.throughput_kcps},
                           {"per_thread_kcps", m.per_thread_kcps},
                           {"latency_all_mean_ms", m.all.mean_ms},
                           {"latency_all_p99_ms", m.all.p99_ms},
                           {"latency_passed_mean_ms", m.passed.mean_ms},
                           {"latency_failed_mean_ms", m.failed.mean_ms},
                           {"fail_rate", m.fail_rate},
                           {"optimistic_total", m.optimistic_total},
                           {"optimistic_failed", m.optimistic_failed},
                           {"cpu_usage", m.cpu_usage}});
  }
  std::ofstream jf(json_path);
  jf << j.dump(2) << '\n';

  report.csv_path = csv.string();
  report.json_path = json_path.string();
}

std::vector<std::string> scenario_names() {
  return {"fail-cost", "dependent-sweep", "thread-sweep", "crash"};
}

ScenarioReport run_scenario(const std::string& name, RunConfig base) {
  if (name == "fail-cost") return scenario_fail_cost(base);
  if (name == "dependent-sweep") return scenario_dependent_sweep(base);
  if (name == "thread-sweep") return scenario_thread_sweep(base);
  if (name == "crash") return scenario_crash(base);
  throw std::invalid_argument("unknown scenario: " + name);
}

}  // namespace optsmr
