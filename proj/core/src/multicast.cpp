#include "optsmr/multicast.hpp"

#include <ostream>
#include <stdexcept>

namespace optsmr {

bool GroupStream::matches(const GroupSet& dest) const {
  if (group_.is_all()) return dest.is_all();
  // An indexed stream carries its own singleton traffic plus everything
  // addressed to all groups, merged in global sequence order.
  return dest.is_all() || dest.index() == group_.index();
}

std::optional<MulticastMessage> GroupStream::next() {
  std::unique_lock<std::mutex> lk(kernel_->mu_);
  for (;;) {
    auto& rep = *kernel_->replicas_[replica_];
    if (kernel_->shutdown_ || !rep.live) return std::nullopt;
    // cursor_ is an absolute position; entries below base_ were collected,
    // which can only happen once every attached stream moved past them.
    if (cursor_ < kernel_->base_) cursor_ = kernel_->base_;
    bool advanced = false;
    while (cursor_ < kernel_->next_seq_) {
      const auto& e = kernel_->log_[cursor_ - kernel_->base_];
      uint64_t seq = cursor_ + 1;
      ++cursor_;
      advanced = true;
      if (matches(e.dest)) {
        delivered_.fetch_add(1, std::memory_order_release);
        MulticastMessage m{e.msg_id, e.dest, seq, e.payload};
        lk.unlock();
        kernel_->space_cv_.notify_all();
        return m;
      }
    }
    if (advanced) kernel_->space_cv_.notify_all();
    cv_.wait(lk);
  }
}

MulticastKernel::MulticastKernel(KernelConfig cfg)
    : cfg_(cfg), addressed_(cfg.groups >= 1 ? cfg.groups + 1 : 1) {
  if (cfg_.groups < 1) throw std::invalid_argument("kernel needs at least one group");
  if (cfg_.stream_capacity < 1) throw std::invalid_argument("stream capacity must be >= 1");
}

MulticastKernel::~MulticastKernel() { shutdown(); }

ReplicaId MulticastKernel::add_replica() {
  std::lock_guard<std::mutex> lk(mu_);
  if (shutdown_) throw std::logic_error("kernel is shut down");
  replicas_.push_back(std::make_unique<ReplicaState>());
  return ReplicaId(replicas_.size() - 1);
}

unsigned MulticastKernel::replica_count() const {
  std::lock_guard<std::mutex> lk(mu_);
  return unsigned(replicas_.size());
}

bool MulticastKernel::replica_live(ReplicaId r) const {
  std::lock_guard<std::mutex> lk(mu_);
  if (r >= replicas_.size()) throw std::out_of_range("unknown replica");
  return replicas_[r]->live;
}

GroupStream& MulticastKernel::stream(ReplicaId replica, GroupId group) {
  std::lock_guard<std::mutex> lk(mu_);
  if (replica >= replicas_.size()) throw std::out_of_range("unknown replica");
  if (!group.is_all() && group.index() >= cfg_.groups)
    throw std::out_of_range("unknown group");
  unsigned slot = group.is_all() ? kAllSlot : group.index();
  auto& streams = replicas_[replica]->streams;
  auto it = streams.find(slot);
  if (it == streams.end()) {
    auto s = std::unique_ptr<GroupStream>(new GroupStream(this, replica, group));
    s->cursor_ = base_;
    it = streams.emplace(slot, std::move(s)).first;
  }
  return *it->second;
}

uint64_t MulticastKernel::min_live_cursor_locked() const {
  uint64_t min = next_seq_;
  for (const auto& rep : replicas_) {
    if (!rep->live) continue;
    for (const auto& [slot, s] : rep->streams)
      if (s->cursor_ < min) min = s->cursor_;
  }
  return min;
}

void MulticastKernel::collect_garbage_locked() {
  uint64_t keep_from = min_live_cursor_locked();
  while (base_ < keep_from && !log_.empty()) {
    log_.pop_front();
    ++base_;
  }
}

void MulticastKernel::notify_streams_locked(const GroupSet& dest) {
  for (const auto& rep : replicas_) {
    if (!rep->live) continue;
    for (const auto& [slot, s] : rep->streams)
      if (s->matches(dest)) s->cv_.notify_one();
  }
}

std::optional<MessageId> MulticastKernel::multicast_locked(std::unique_lock<std::mutex>& lk,
                                                           GroupSet dest,
                                                           std::vector<uint8_t>&& payload,
                                                           bool blocking) {
  if (!dest.is_all() && dest.index() >= cfg_.groups)
    throw std::out_of_range("destination group does not exist");
  if (blocking) {
    space_cv_.wait(lk, [&] {
      return shutdown_ || next_seq_ - min_live_cursor_locked() < cfg_.stream_capacity;
    });
  }
  if (shutdown_) return std::nullopt;

  MessageId id = next_msg_id_.fetch_add(1, std::memory_order_relaxed) + 1;
  log_.push_back(Entry{id, dest, std::move(payload)});
  ++next_seq_;
  seq_count_.store(next_seq_, std::memory_order_release);
  if (dest.is_all()) {
    for (auto& a : addressed_) a.fetch_add(1, std::memory_order_release);
  } else {
    addressed_[dest.index()].fetch_add(1, std::memory_order_release);
  }
  if (cfg_.keep_audit_log) audit_.push_back(AuditEntry{next_seq_, id, dest});
  collect_garbage_locked();
  notify_streams_locked(dest);
  return id;
}

std::optional<MessageId> MulticastKernel::multicast(GroupSet dest,
                                                    std::vector<uint8_t> payload) {
  std::unique_lock<std::mutex> lk(mu_);
  return multicast_locked(lk, dest, std::move(payload), /*blocking=*/true);
}

std::optional<MessageId> MulticastKernel::multicast_once(GroupSet dest,
                                                         std::vector<uint8_t> payload,
                                                         DedupKey key) {
  std::unique_lock<std::mutex> lk(mu_);
  if (auto it = sequenced_once_.find(key); it != sequenced_once_.end()) return it->second;
  // Not subject to backpressure: the callers are replica workers, which are
  // themselves stream consumers.
  auto id = multicast_locked(lk, dest, std::move(payload), /*blocking=*/false);
  if (id) sequenced_once_.emplace(key, *id);
  return id;
}

void MulticastKernel::inject_crash(ReplicaId replica) {
  std::lock_guard<std::mutex> lk(mu_);
  if (replica >= replicas_.size()) throw std::out_of_range("unknown replica");
  auto& rep = *replicas_[replica];
  if (!rep.live) return;  // idempotent
  rep.live = false;
  for (auto& [slot, s] : rep.streams) s->cv_.notify_all();
  // Dead cursors no longer pin the log or hold back producers.
  space_cv_.notify_all();
}

void MulticastKernel::shutdown() {
  std::lock_guard<std::mutex> lk(mu_);
  if (shutdown_) return;
  shutdown_ = true;
  for (auto& rep : replicas_)
    for (auto& [slot, s] : rep->streams) s->cv_.notify_all();
  space_cv_.notify_all();
}

bool MulticastKernel::is_shutdown() const {
  std::lock_guard<std::mutex> lk(mu_);
  return shutdown_;
}

uint64_t MulticastKernel::addressed_count(GroupId group) const {
  unsigned slot = group.is_all() ? cfg_.groups : group.index();
  if (slot >= addressed_.size()) throw std::out_of_range("unknown group");
  return addressed_[slot].load(std::memory_order_acquire);
}

void MulticastKernel::dump_sequenced_log(std::ostream& out) const {
  std::lock_guard<std::mutex> lk(mu_);
  if (!cfg_.keep_audit_log)
    throw std::logic_error("sequenced-log dump requires keep_audit_log");
  for (const auto& e : audit_)
    out << e.global_seq << ',' << e.msg_id << ',' << e.dest.str() << '\n';
}

std::vector<MulticastKernel::AuditEntry> MulticastKernel::audit_log() const {
  std::lock_guard<std::mutex> lk(mu_);
  return audit_;
}

}  // namespace optsmr
