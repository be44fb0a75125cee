#include "optsmr/engine.hpp"

#include <chrono>
#include <stdexcept>

#include "optsmr/routing.hpp"

namespace optsmr {

// ---------------------------------------------------------------- ResponseBus

ResponseBus::ResponseBus(unsigned clients) {
  boxes_.reserve(clients);
  for (unsigned i = 0; i < clients; ++i) boxes_.push_back(std::make_unique<Mailbox>());
}

void ResponseBus::post(const Response& r) {
  if (tap_) tap_(r);
  if (r.id.client_id >= boxes_.size()) return;  // client not registered; drop
  auto& box = *boxes_[r.id.client_id];
  {
    std::lock_guard<std::mutex> lk(box.mu);
    box.q.push_back(r);
  }
  box.cv.notify_one();
}

std::optional<Response> ResponseBus::wait(uint32_t client) {
  auto& box = *boxes_.at(client);
  std::unique_lock<std::mutex> lk(box.mu);
  box.cv.wait(lk, [&] { return !box.q.empty() || closed_.load(); });
  if (box.q.empty()) return std::nullopt;
  Response r = std::move(box.q.front());
  box.q.pop_front();
  return r;
}

void ResponseBus::close() {
  closed_.store(true);
  for (auto& box : boxes_) {
    std::lock_guard<std::mutex> lk(box->mu);
    box->cv.notify_all();
  }
}

// ----------------------------------------------------------------- Rendezvous

Rendezvous::Slot& Rendezvous::slot_locked(MessageId m) { return slots_[m]; }

void Rendezvous::leave_locked(MessageId m, Slot& s) {
  if (++s.exited == threads_) slots_.erase(m);
}

bool Rendezvous::signal_and_wait(MessageId m) {
  std::unique_lock<std::mutex> lk(mu_);
  if (halted_.load()) return false;
  Slot& s = slot_locked(m);
  ++s.signals;
  s.cv.notify_all();
  s.cv.wait(lk, [&] { return s.done || halted_.load(); });
  bool ok = s.done;
  leave_locked(m, s);
  return ok;
}

bool Rendezvous::await_peers(MessageId m) {
  std::unique_lock<std::mutex> lk(mu_);
  if (halted_.load() && threads_ > 1) return false;
  Slot& s = slot_locked(m);
  s.cv.wait(lk, [&] { return s.signals == threads_ - 1 || halted_.load(); });
  if (s.signals != threads_ - 1) {
    leave_locked(m, s);
    return false;
  }
  return true;
}

void Rendezvous::release(MessageId m) {
  std::lock_guard<std::mutex> lk(mu_);
  auto it = slots_.find(m);
  if (it == slots_.end()) return;
  it->second.done = true;
  it->second.cv.notify_all();
  leave_locked(m, it->second);
}

void Rendezvous::halt() {
  std::lock_guard<std::mutex> lk(mu_);
  halted_.store(true);
  for (auto& [id, s] : slots_) s.cv.notify_all();
}

// -------------------------------------------------------------------- Replica

Replica::Replica(ReplicaId id, const EngineConfig& cfg, MulticastKernel& kernel,
                 ResponseBus& bus, std::unique_ptr<Service> service)
    : id_(id),
      cfg_(cfg),
      kernel_(kernel),
      bus_(bus),
      service_(std::move(service)),
      rendezvous_(cfg.routing.threads) {
  processed_.reserve(cfg_.routing.threads);
  for (unsigned k = 0; k < cfg_.routing.threads; ++k)
    processed_.push_back(std::make_unique<std::atomic<uint64_t>>(0));
}

Replica::~Replica() { join(); }

void Replica::start() {
  for (unsigned k = 0; k < cfg_.routing.threads; ++k) {
    // Attach before the thread runs so no early multicast is missed.
    kernel_.stream(id_, GroupId::indexed(k));
    workers_.emplace_back([this, k] { worker_main(k); });
  }
}

void Replica::join() {
  for (auto& t : workers_)
    if (t.joinable()) t.join();
  workers_.clear();
}

void Replica::halt() { rendezvous_.halt(); }

uint64_t Replica::processed(unsigned k) const {
  return processed_.at(k)->load(std::memory_order_acquire);
}

std::vector<JournalEntry> Replica::journal() const {
  std::lock_guard<std::mutex> lk(journal_mu_);
  return journal_;
}

void Replica::worker_main(unsigned k) {
  auto& stream = kernel_.stream(id_, GroupId::indexed(k));
  auto& processed = *processed_[k];
  uint64_t last_seq = 0;
  while (auto msg = stream.next()) {
    // "for the first time" guard: the stream order is the global order, so a
    // strictly-increasing sequence check deduplicates by message identity.
    if (msg->global_seq > last_seq) {
      last_seq = msg->global_seq;
      Command cmd = decode_command(msg->payload.data(), msg->payload.size());
      if (msg->dest.is_singleton())
        handle_parallel(k, *msg, cmd);
      else
        handle_synchronous(k, *msg, cmd);
    }
    processed.fetch_add(1, std::memory_order_release);
  }
}

void Replica::handle_parallel(unsigned k, const MulticastMessage& m, Command& cmd) {
  if (cmd.mode == Mode::Optimistic) {
    SafetyVerdict verdict = service_->safety_check(cmd, k);
    if (!verdict.passed()) {
      failed_checks_.fetch_add(1, std::memory_order_relaxed);
      if (cfg_.failed_path == FailedPath::Remulticast) {
        // Re-multicast conservatively; the kernel sequences exactly one of
        // the n replicas' identical retries.
        Command retry = cmd;
        retry.mode = Mode::Conservative;
        GroupSet dest = cc_g(retry.kind, retry.key, cfg_.routing);
        DedupKey key{(uint64_t(retry.id.client_id) << 1) | 1, retry.id.client_seq};
        kernel_.multicast_once(dest, encode_command(retry), key);
      } else {
        Response r;
        r.id = cmd.id;
        r.replica_id = id_;
        r.executing_thread = k;
        r.executed_mode = Mode::Optimistic;
        r.check_failed = true;
        bus_.post(r);
      }
      return;  // no execution, no response
    }
  }
  execute_and_respond(k, m, cmd, /*synchronous=*/false);
}

void Replica::handle_synchronous(unsigned k, const MulticastMessage& m, Command& cmd) {
  unsigned executor = m.dest.min_index();
  if (k == executor) {
    if (!rendezvous_.await_peers(m.msg_id)) return;  // halted
    execute_and_respond(k, m, cmd, /*synchronous=*/true);
    rendezvous_.release(m.msg_id);
  } else {
    rendezvous_.signal_and_wait(m.msg_id);
  }
}

void Replica::execute_and_respond(unsigned k, const MulticastMessage& m,
                                  const Command& cmd, bool synchronous) {
  int concurrent = in_flight_.fetch_add(1, std::memory_order_acq_rel) + 1;
  if (synchronous) {
    sync_active_.store(true, std::memory_order_release);
    if (concurrent != 1) overlap_violations_.fetch_add(1, std::memory_order_relaxed);
  } else if (sync_active_.load(std::memory_order_acquire)) {
    overlap_violations_.fetch_add(1, std::memory_order_relaxed);
  }

  Response r;
  r.id = cmd.id;
  r.output = service_->execute(cmd);
  r.replica_id = id_;
  r.executing_thread = k;
  r.executed_mode = cmd.mode;

  if (synchronous) sync_active_.store(false, std::memory_order_release);
  in_flight_.fetch_sub(1, std::memory_order_acq_rel);
  executed_.fetch_add(1, std::memory_order_relaxed);

  if (cfg_.record_journal) {
    std::lock_guard<std::mutex> lk(journal_mu_);
    journal_.push_back(JournalEntry{cmd.id, cmd.mode, k, m.msg_id});
  }
  bus_.post(r);
}

// ----------------------------------------------------------------- ReplicaSet

ReplicaSet::ReplicaSet(EngineConfig cfg, MulticastKernel& kernel, ResponseBus& bus,
                       const ServiceFactory& factory)
    : cfg_(cfg), kernel_(kernel) {
  cfg_.routing.validate();
  if (kernel.groups() != cfg_.routing.threads)
    throw std::invalid_argument("kernel group count does not match K");
  if (cfg_.mode == EngineMode::SequentialSMR && cfg_.routing.threads != 1)
    throw std::invalid_argument("sequential SMR requires K == 1");
  for (unsigned r = 0; r < cfg_.routing.replicas; ++r) {
    ReplicaId id = kernel.add_replica();
    replicas_.push_back(std::make_unique<Replica>(id, cfg_, kernel, bus, factory()));
    live_.push_back(true);
  }
  for (auto& rep : replicas_) rep->start();
}

ReplicaSet::~ReplicaSet() { stop(); }

unsigned ReplicaSet::live_count() const {
  unsigned n = 0;
  for (bool l : live_) n += l;
  return n;
}

void ReplicaSet::crash(ReplicaId r) {
  if (r >= replicas_.size()) throw std::out_of_range("unknown replica");
  if (!live_[r]) return;
  live_[r] = false;
  kernel_.inject_crash(r);
  replicas_[r]->halt();
  replicas_[r]->join();
}

bool ReplicaSet::quiescent() const {
  uint64_t seq = kernel_.sequenced_count();
  for (unsigned r = 0; r < replicas_.size(); ++r) {
    if (!live_[r]) continue;
    for (unsigned k = 0; k < cfg_.routing.threads; ++k) {
      GroupId g = GroupId::indexed(k);
      uint64_t delivered = kernel_.stream(r, g).delivered();
      if (delivered != kernel_.addressed_count(g)) return false;
      if (replicas_[r]->processed(k) != delivered) return false;
    }
  }
  // No message may have been sequenced while we looked.
  return kernel_.sequenced_count() == seq;
}

bool ReplicaSet::await_quiescence(double timeout_s) const {
  auto deadline = std::chrono::steady_clock::now() +
                  std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                      std::chrono::duration<double>(timeout_s));
  while (!quiescent()) {
    if (std::chrono::steady_clock::now() > deadline) return false;
    std::this_thread::sleep_for(std::chrono::microseconds(200));
  }
  return true;
}

std::vector<std::string> ReplicaSet::live_digests() const {
  std::vector<std::string> out;
  for (unsigned r = 0; r < replicas_.size(); ++r)
    if (live_[r]) out.push_back(replicas_[r]->service().digest_hex());
  return out;
}

void ReplicaSet::stop() {
  if (stopped_) return;
  stopped_ = true;
  kernel_.shutdown();
  for (auto& rep : replicas_) rep->halt();
  for (auto& rep : replicas_) rep->join();
}

std::unique_ptr<ReplicaSet> engine_run(const EngineConfig& cfg, MulticastKernel& kernel,
                                       ResponseBus& bus, const ServiceFactory& factory) {
  return std::make_unique<ReplicaSet>(cfg, kernel, bus, factory);
}

}  // namespace optsmr
