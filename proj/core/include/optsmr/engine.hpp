#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <unordered_map>
#include <vector>

#include "optsmr/command.hpp"
#include "optsmr/multicast.hpp"
#include "optsmr/routing.hpp"
#include "optsmr/service.hpp"

namespace optsmr {

/// What a replica does when an optimistic command fails its safety check:
/// re-multicast it conservatively itself, or notify the client to resubmit.
enum class FailedPath { Remulticast, ClientResubmit };

struct EngineConfig {
  EngineMode mode = EngineMode::OptPSMR;
  RoutingConfig routing;
  FailedPath failed_path = FailedPath::Remulticast;
  bool record_journal = false;  // per-replica execution journal, test support
};

/// First-response mailbox fabric between replicas and client proxies.
class ResponseBus {
public:
  explicit ResponseBus(unsigned clients);

  void post(const Response& r);
  /// Blocks for the next response addressed to `client`; nullopt once closed
  /// and drained.
  std::optional<Response> wait(uint32_t client);
  void close();

  /// Observes every posted response (before mailbox filtering); test support
  /// for the response-agreement property. Set before threads start.
  void set_tap(std::function<void(const Response&)> tap) { tap_ = std::move(tap); }

private:
  struct Mailbox {
    std::mutex mu;
    std::condition_variable cv;
    std::deque<Response> q;
  };
  std::vector<std::unique_ptr<Mailbox>> boxes_;
  std::atomic<bool> closed_{false};
  std::function<void(const Response&)> tap_;
};

/// Per-replica rendezvous for synchronous mode, keyed by message id. The
/// executor waits for a signal from every other destination thread, runs,
/// then releases them all.
class Rendezvous {
public:
  explicit Rendezvous(unsigned threads) : threads_(threads) {}

  /// Non-executor side: signal the executor, then pause until released.
  /// Returns false if the replica halted while waiting.
  bool signal_and_wait(MessageId m);

  /// Executor side: wait for `threads-1` signals. Returns false (and skips
  /// execution) if the replica halted while waiting.
  bool await_peers(MessageId m);
  /// Executor side: release every paused thread.
  void release(MessageId m);

  void halt();  // wake everyone; all later calls return immediately

private:
  struct Slot {
    unsigned signals = 0;
    bool done = false;
    unsigned exited = 0;
    std::condition_variable cv;
  };
  Slot& slot_locked(MessageId m);
  void leave_locked(MessageId m, Slot& s);

  unsigned threads_;
  std::mutex mu_;
  std::unordered_map<MessageId, Slot> slots_;
  std::atomic<bool> halted_{false};
};

struct JournalEntry {
  CmdId cmd;
  Mode mode;
  unsigned thread;
  MessageId msg;
};

/// One replica: K worker threads bound to streams g_0..g_{K-1}, a private
/// service instance, and the synchronous-mode rendezvous.
class Replica {
public:
  Replica(ReplicaId id, const EngineConfig& cfg, MulticastKernel& kernel,
          ResponseBus& bus, std::unique_ptr<Service> service);
  ~Replica();

  void start();
  void join();
  /// Crash support: wakes rendezvous waiters so workers can observe the dead
  /// streams and exit.
  void halt();

  ReplicaId id() const { return id_; }
  Service& service() { return *service_; }
  const Service& service() const { return *service_; }

  uint64_t executed_count() const { return executed_.load(); }
  uint64_t failed_checks() const { return failed_checks_.load(); }
  uint64_t overlap_violations() const { return overlap_violations_.load(); }
  std::vector<JournalEntry> journal() const;

  /// Messages worker k has finished handling (executed, re-multicast, or
  /// skipped); equal to its stream's delivered count exactly when the worker
  /// is parked on the stream.
  uint64_t processed(unsigned k) const;

private:
  void worker_main(unsigned k);
  void handle_parallel(unsigned k, const MulticastMessage& m, Command& cmd);
  void handle_synchronous(unsigned k, const MulticastMessage& m, Command& cmd);
  void execute_and_respond(unsigned k, const MulticastMessage& m, const Command& cmd,
                           bool synchronous);

  ReplicaId id_;
  const EngineConfig& cfg_;
  MulticastKernel& kernel_;
  ResponseBus& bus_;
  std::unique_ptr<Service> service_;
  Rendezvous rendezvous_;
  std::vector<std::thread> workers_;
  std::vector<std::unique_ptr<std::atomic<uint64_t>>> processed_;

  std::atomic<uint64_t> executed_{0};
  std::atomic<uint64_t> failed_checks_{0};
  std::atomic<int> in_flight_{0};
  std::atomic<bool> sync_active_{false};
  std::atomic<uint64_t> overlap_violations_{0};

  mutable std::mutex journal_mu_;
  std::vector<JournalEntry> journal_;
};

/// The n replicas of one deployment plus their shared response fabric.
class ReplicaSet {
public:
  ReplicaSet(EngineConfig cfg, MulticastKernel& kernel, ResponseBus& bus,
             const ServiceFactory& factory);
  ~ReplicaSet();

  const EngineConfig& config() const { return cfg_; }
  Replica& replica(ReplicaId r) { return *replicas_.at(r); }
  unsigned size() const { return unsigned(replicas_.size()); }
  bool live(ReplicaId r) const { return live_.at(r); }
  unsigned live_count() const;

  /// Stops delivery to the replica and unblocks its threads; the service
  /// stays available through the remaining replicas. Idempotent.
  void crash(ReplicaId r);

  /// True once every live stream has scanned the whole sequenced log, no
  /// worker is processing, and no new message arrived meanwhile.
  bool quiescent() const;
  /// Polls for quiescence; false on timeout.
  bool await_quiescence(double timeout_s) const;

  std::vector<std::string> live_digests() const;

  /// Orderly teardown: shuts the kernel down and joins all workers.
  void stop();

private:
  EngineConfig cfg_;
  MulticastKernel& kernel_;
  std::vector<std::unique_ptr<Replica>> replicas_;
  std::vector<bool> live_;
  bool stopped_ = false;
};

/// Validates configuration and spawns n replicas with K workers each, every
/// replica owning an independent service instance.
std::unique_ptr<ReplicaSet> engine_run(const EngineConfig& cfg, MulticastKernel& kernel,
                                       ResponseBus& bus, const ServiceFactory& factory);

}  // namespace optsmr
