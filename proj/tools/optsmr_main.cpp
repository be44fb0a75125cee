// Command-line front end: assemble a deployment, run one workload or a named
// scenario, or check a recorded history for linearizability.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "optsmr/linearizability.hpp"
#include "optsmr/run_config.hpp"
#include "optsmr/scenarios.hpp"
#include "optsmr/verify_cases.hpp"
#include "optsmr/workload.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitViolation = 1;
constexpr int kExitConfig = 2;
constexpr int kExitWatchdog = 3;

optsmr::Mix parse_mix(const std::string& text) {
  optsmr::Mix mix{0, 0, 0, 0};
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    auto eq = part.find('=');
    if (eq == std::string::npos)
      throw CLI::ValidationError("--mix", "expected kind=pct pairs: " + part);
    std::string kind = part.substr(0, eq);
    unsigned pct = unsigned(std::stoul(part.substr(eq + 1)));
    if (kind == "read")
      mix.read = pct;
    else if (kind == "update")
      mix.update = pct;
    else if (kind == "insert")
      mix.insert = pct;
    else if (kind == "delete")
      mix.del = pct;
    else
      throw CLI::ValidationError("--mix", "unknown command kind: " + kind);
  }
  if (mix.sum() != 100)
    throw CLI::ValidationError("--mix", "percentages must sum to 100");
  return mix;
}

void add_config_options(CLI::App* app, optsmr::RunConfig& cfg, std::string& mode,
                        std::string& mix, std::string& failed_path) {
  app->add_option("--mode", mode, "Engine: smr, psmr, or opt-psmr")
      ->default_val("opt-psmr");
  app->add_option("--threads,-K", cfg.threads, "Worker threads per replica (K)")
      ->default_val(cfg.threads);
  app->add_option("--replicas,-n", cfg.replicas, "Replica count (tolerates n-1 crashes)")
      ->default_val(cfg.replicas);
  app->add_option("--max-key,-M", cfg.max_key, "Largest key in the key space")
      ->default_val(cfg.max_key);
  app->add_option("--preload", cfg.preload, "Keys preloaded into each replica's tree")
      ->default_val(cfg.preload);
  app->add_option("--fanout,-F", cfg.fanout, "B+-tree fanout")->default_val(cfg.fanout);
  app->add_option("--mix", mix, "Workload mix, e.g. read=50,insert=25,delete=25")
      ->default_val("read=50,insert=25,delete=25");
  app->add_option("--clients", cfg.clients, "Closed-loop client count")
      ->default_val(cfg.clients);
  app->add_option("--duration", cfg.duration_s,
                  "Run length in seconds (0 runs --ops commands instead)")
      ->default_val(cfg.duration_s);
  app->add_option("--discard", cfg.discard_s, "Warmup/cooldown seconds discarded")
      ->default_val(cfg.discard_s);
  app->add_option("--ops", cfg.ops, "Total command count for count-based runs")
      ->default_val(cfg.ops);
  app->add_option("--seed", cfg.seed, "Workload seed (echoed into every output)")
      ->default_val(cfg.seed);
  app->add_option("--failed-path", failed_path,
                  "Failed safety check handling: remulticast or resubmit")
      ->default_val("remulticast");
  app->add_option("--transport-delay-us", cfg.transport_delay_us,
                  "Synthetic per-hop delay in microseconds")
      ->default_val(cfg.transport_delay_us);
  app->add_option("--exec-sleep-us", cfg.exec_sleep_us,
                  "Synthetic per-command service cost, sleeping part")
      ->default_val(cfg.exec_sleep_us);
  app->add_option("--exec-spin-us", cfg.exec_spin_us,
                  "Synthetic per-command service cost, spinning part")
      ->default_val(cfg.exec_spin_us);
  app->add_option("--stream-capacity", cfg.stream_capacity,
                  "Bounded per-stream lag before multicast blocks")
      ->default_val(cfg.stream_capacity);
  app->add_option("--watchdog", cfg.watchdog_s, "Abort after this many stalled seconds")
      ->default_val(cfg.watchdog_s);
  app->add_option("--out", cfg.out_dir, "Output directory")
      ->envname("OPTSMR_OUT")
      ->default_val(cfg.out_dir);
  app->add_flag("--history", cfg.record_history, "Record the invocation/response history");
  app->add_flag("--dump-seq-log", cfg.audit_log,
                "Keep and dump the sequenced log for order auditing");
}

void finish_config(optsmr::RunConfig& cfg, const std::string& mode, const std::string& mix,
                   const std::string& failed_path) {
  auto m = optsmr::engine_mode_from_name(mode);
  if (!m) throw CLI::ValidationError("--mode", "unknown engine mode: " + mode);
  cfg.mode = *m;
  cfg.mix = parse_mix(mix);
  if (failed_path == "remulticast")
    cfg.failed_path = optsmr::FailedPath::Remulticast;
  else if (failed_path == "resubmit")
    cfg.failed_path = optsmr::FailedPath::ClientResubmit;
  else
    throw CLI::ValidationError("--failed-path", "expected remulticast or resubmit");
  cfg.validate_and_normalize();
}

std::string run_stem(const optsmr::RunConfig& cfg) {
  std::ostringstream os;
  os << "run_" << optsmr::engine_mode_name(cfg.mode) << "_K" << cfg.threads << "_"
     << cfg.mix.tag() << "_seed" << cfg.seed;
  return os.str();
}

int do_run(const optsmr::RunConfig& cfg) {
  optsmr::RunResult r = optsmr::run_workload(cfg.mode, cfg);
  const optsmr::Metrics& m = r.metrics;

  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  std::string stem = run_stem(cfg);

  nlohmann::json j;
  j["mode"] = optsmr::engine_mode_name(cfg.mode);
  j["seed"] = cfg.seed;
  j["threads"] = cfg.threads;
  j["replicas"] = cfg.replicas;
  j["clients"] = cfg.clients;
  j["preload"] = cfg.preload;
  j["fanout"] = cfg.fanout;
  j["max_key"] = cfg.max_key;
  j["throughput_kcps"] = m.throughput_kcps;
  j["per_thread_kcps"] = m.per_thread_kcps;
  j["latency_ms"] = {{"all",
                      {{"mean", m.all.mean_ms}, {"p50", m.all.p50_ms}, {"p99", m.all.p99_ms}}},
                     {"passed",
                      {{"mean", m.passed.mean_ms},
                       {"p50", m.passed.p50_ms},
                       {"p99", m.passed.p99_ms}}},
                     {"failed",
                      {{"mean", m.failed.mean_ms},
                       {"p50", m.failed.p50_ms},
                       {"p99", m.failed.p99_ms}}}};
  j["fail_rate"] = m.fail_rate;
  j["optimistic_total"] = m.optimistic_total;
  j["optimistic_failed"] = m.optimistic_failed;
  j["issued"] = m.issued;
  j["completed"] = m.completed;
  j["window_s"] = m.window_s;
  j["cpu_usage"] = m.cpu_usage;
  j["converged"] = r.converged;
  j["digests"] = r.digests;
  j["sequenced_messages"] = r.sequenced_messages;

  fs::path json_path = fs::path(cfg.out_dir) / (stem + ".json");
  std::ofstream(json_path) << j.dump(2) << '\n';

  if (cfg.record_history) {
    fs::path hist_path = fs::path(cfg.out_dir) / (stem + ".history");
    std::ofstream hf(hist_path);
    for (const auto& ev : r.history) hf << ev.line() << '\n';
    std::cout << "history: " << hist_path.string() << "\n";
  }
  if (cfg.audit_log) {
    fs::path seq_path = fs::path(cfg.out_dir) / (stem + ".seqlog");
    std::ofstream sf(seq_path);
    for (const auto& e : r.audit)
      sf << e.global_seq << ',' << e.msg_id << ',' << e.dest.str() << '\n';
    std::cout << "sequenced log: " << seq_path.string() << "\n";
  }

  std::cout << "mode=" << optsmr::engine_mode_name(cfg.mode) << " K=" << cfg.threads
            << " clients=" << cfg.clients << " seed=" << cfg.seed << "\n"
            << "throughput " << m.throughput_kcps << " kcps, mean latency "
            << m.all.mean_ms << " ms, fail rate " << m.fail_rate << "\n"
            << "converged=" << (r.converged ? "yes" : "no") << " ("
            << r.digests.size() << " live replicas)\n"
            << "metrics: " << json_path.string() << std::endl;
  return r.converged ? kExitOk : kExitViolation;
}

int do_scenario(const std::string& name, optsmr::RunConfig cfg) {
  optsmr::ScenarioReport rep = optsmr::run_scenario(name, cfg);
  optsmr::write_report_files(rep, cfg);
  std::cout << "scenario " << rep.name << ": " << rep.points.size() << " points\n";
  for (const auto& [k, v] : rep.summary) std::cout << "  " << k << " = " << v << "\n";
  std::cout << "csv: " << rep.csv_path << "\njson: " << rep.json_path << std::endl;
  return kExitOk;
}

int do_verify(const std::string& path, uint64_t budget) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "cannot open history: " << path << std::endl;
    return kExitConfig;
  }
  auto events = optsmr::HistoryLog::load(in);
  auto ops = optsmr::operations_from_history(events);
  auto res = optsmr::check_linearizable(ops, optsmr::CheckerBudget{budget});
  switch (res.verdict) {
    case optsmr::Verdict::Ok:
      std::cout << "Ok: linearizable (" << ops.size() << " operations, "
                << res.states_explored << " states explored)\nwitness:";
      for (size_t i : res.witness) std::cout << " " << ops[i].client_id << "#"
                                             << ops[i].client_seq;
      std::cout << std::endl;
      return kExitOk;
    case optsmr::Verdict::Violation:
      std::cout << "Violation: no linearization exists (" << res.states_explored
                << " states explored)\nlongest linearizable prefix ("
                << res.best_prefix.size() << " ops):";
      for (size_t i : res.best_prefix) std::cout << " " << ops[i].client_id << "#"
                                                 << ops[i].client_seq;
      std::cout << "\nblocked candidates:\n";
      for (const auto& e : res.evidence) std::cout << "  " << e << "\n";
      std::cout << std::flush;
      return kExitViolation;
    case optsmr::Verdict::Inconclusive:
      std::cout << "Inconclusive: search budget of " << budget
                << " states exhausted; no verdict" << std::endl;
      return kExitOk;
  }
  return kExitConfig;
}

int do_cases() {
  auto outcomes = optsmr::case_suite_44();
  bool all = true;
  for (const auto& c : outcomes) {
    std::cout << (c.passed ? "[PASS] " : "[FAIL] ") << c.name << ": " << c.detail << "\n";
    all &= c.passed;
  }
  return all ? kExitOk : kExitViolation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Replicated B+-tree service over atomic multicast: sequential, "
               "conservative-parallel, and optimistic-parallel engines"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from an INI/TOML file; flags win");

  optsmr::RunConfig cfg;
  std::string mode_s, mix_s, failed_path_s;

  CLI::App* run = app.add_subcommand("run", "Run one workload and emit metrics");
  add_config_options(run, cfg, mode_s, mix_s, failed_path_s);

  CLI::App* scen = app.add_subcommand("scenario", "Run a named experiment scenario");
  std::string scenario_name;
  scen->add_option("name", scenario_name, "fail-cost | dependent-sweep | thread-sweep | crash")
      ->required();
  add_config_options(scen, cfg, mode_s, mix_s, failed_path_s);

  CLI::App* verify = app.add_subcommand("verify", "Check a recorded history");
  std::string history_path;
  uint64_t budget = 2'000'000;
  verify->add_option("history", history_path, "History log file")->required();
  verify->add_option("--budget", budget, "Search-state budget before Inconclusive");

  CLI::App* cases = app.add_subcommand("cases", "Run the two-command correctness cases");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      finish_config(cfg, mode_s, mix_s, failed_path_s);
      return do_run(cfg);
    }
    if (scen->parsed()) {
      finish_config(cfg, mode_s, mix_s, failed_path_s);
      bool known = false;
      for (const auto& n : optsmr::scenario_names()) known |= n == scenario_name;
      if (!known) {
        std::cerr << "unknown scenario: " << scenario_name << std::endl;
        return kExitConfig;
      }
      return do_scenario(scenario_name, cfg);
    }
    if (verify->parsed()) return do_verify(history_path, budget);
    if (cases->parsed()) return do_cases();
  } catch (const optsmr::WatchdogError& e) {
    std::cerr << "watchdog: " << e.what() << std::endl;
    return kExitWatchdog;
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << std::endl;
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitConfig;
  }
  return kExitConfig;
}
