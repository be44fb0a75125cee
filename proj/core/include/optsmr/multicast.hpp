#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <unordered_map>
#include <vector>

#include "optsmr/group.hpp"

namespace optsmr {

using MessageId = uint64_t;
using ReplicaId = uint32_t;

/// One ordered unit in the kernel. global_seq is assigned atomically at
/// multicast time and is strictly increasing and unique across all groups.
struct MulticastMessage {
  MessageId msg_id = 0;
  GroupSet dest = GroupSet::all_groups();
  uint64_t global_seq = 0;
  std::vector<uint8_t> payload;
};

/// Key for sequence-once multicast: when several replicas independently
/// re-multicast the same failed command, only the first copy is sequenced.
struct DedupKey {
  uint64_t a = 0;
  uint64_t b = 0;
  friend bool operator==(const DedupKey&, const DedupKey&) = default;
};

struct DedupKeyHash {
  size_t operator()(const DedupKey& k) const {
    return size_t(k.a * 0x9e3779b97f4a7c15ULL ^ k.b);
  }
};

struct KernelConfig {
  unsigned groups = 1;            // K
  size_t stream_capacity = 65536; // max unscanned lag per attached stream
  bool keep_audit_log = false;    // retain (seq, id, dest) for order auditing
};

class MulticastKernel;

/// Cursor view of one replica over one group's slice of the sequenced log.
/// A stream for an indexed group g_i yields the messages addressed to g_i
/// either directly or via the all-groups destination, in ascending
/// global_seq; the all-groups stream yields only the latter. Exactly one
/// consumer per stream.
class GroupStream {
public:
  /// Blocks until the next message, the kernel shuts down, or the owning
  /// replica crashes; returns nullopt in the latter two cases.
  std::optional<MulticastMessage> next();

  GroupId group() const { return group_; }
  ReplicaId replica() const { return replica_; }
  /// Messages returned so far. A stream attached before any traffic is
  /// drained exactly when this equals the kernel's addressed_count for its
  /// group.
  uint64_t delivered() const { return delivered_.load(std::memory_order_acquire); }

private:
  friend class MulticastKernel;
  GroupStream(MulticastKernel* k, ReplicaId r, GroupId g)
      : kernel_(k), replica_(r), group_(g) {}

  bool matches(const GroupSet& dest) const;

  MulticastKernel* kernel_;
  ReplicaId replica_;
  GroupId group_;
  uint64_t cursor_ = 0;  // absolute log position of the next entry to scan
  std::atomic<uint64_t> delivered_{0};
  std::condition_variable cv_;
};

/// Desk-scale atomic multicast: a single atomic sequencer over K indexed
/// groups plus the all-groups destination. Per-group delivery order is a
/// restriction of one global order, so agreement holds per stream and the
/// delivered-before relation across replicas is acyclic by construction.
/// Replicas own independent cursors and proceed at independent speeds.
class MulticastKernel {
public:
  explicit MulticastKernel(KernelConfig cfg);
  ~MulticastKernel();

  MulticastKernel(const MulticastKernel&) = delete;
  MulticastKernel& operator=(const MulticastKernel&) = delete;

  unsigned groups() const { return cfg_.groups; }

  ReplicaId add_replica();
  unsigned replica_count() const;
  bool replica_live(ReplicaId r) const;

  /// Subscribes (first use) and returns the stream of `group` at `replica`.
  /// Attached streams pin the log tail and participate in backpressure.
  GroupStream& stream(ReplicaId replica, GroupId group);

  /// Assigns the next global sequence number atomically and publishes the
  /// message to every addressed stream. Blocks while any attached live
  /// stream lags a full capacity behind; returns the message id, or nullopt
  /// after shutdown.
  std::optional<MessageId> multicast(GroupSet dest, std::vector<uint8_t> payload);

  /// Sequence-once variant: if a message with the same key was already
  /// sequenced, nothing is appended and the original id is returned.
  /// Replica-originated; never blocks on backpressure so a worker thread
  /// that is itself a consumer cannot deadlock against a full stream.
  std::optional<MessageId> multicast_once(GroupSet dest, std::vector<uint8_t> payload,
                                          DedupKey key);

  /// Stops delivery on every stream of the replica; the kernel and all other
  /// replicas are unaffected. Idempotent; unknown replica throws.
  void inject_crash(ReplicaId replica);

  void shutdown();
  bool is_shutdown() const;

  uint64_t sequenced_count() const { return seq_count_.load(std::memory_order_acquire); }

  /// How many sequenced messages address `group` (for an indexed group:
  /// directly or via the all-groups destination).
  uint64_t addressed_count(GroupId group) const;

  /// Writes the audit log as "global_seq,msg_id,dest" lines (requires
  /// keep_audit_log).
  void dump_sequenced_log(std::ostream& out) const;

  struct AuditEntry {
    uint64_t global_seq;
    MessageId msg_id;
    GroupSet dest;
  };
  std::vector<AuditEntry> audit_log() const;

private:
  friend class GroupStream;

  struct Entry {
    MessageId msg_id;
    GroupSet dest;
    std::vector<uint8_t> payload;
  };

  struct ReplicaState {
    bool live = true;
    // key: group index, or kAllSlot for the all-groups stream
    std::unordered_map<unsigned, std::unique_ptr<GroupStream>> streams;
  };
  static constexpr unsigned kAllSlot = ~0u;

  std::optional<MessageId> multicast_locked(std::unique_lock<std::mutex>& lk,
                                            GroupSet dest, std::vector<uint8_t>&& payload,
                                            bool blocking);
  uint64_t min_live_cursor_locked() const;
  void collect_garbage_locked();
  void notify_streams_locked(const GroupSet& dest);

  KernelConfig cfg_;
  mutable std::mutex mu_;
  std::condition_variable space_cv_;
  std::deque<Entry> log_;       // log_[i] holds global_seq == base_ + i + 1
  uint64_t base_ = 0;           // sequence numbers <= base_ were collected
  uint64_t next_seq_ = 0;
  std::atomic<uint64_t> seq_count_{0};
  std::atomic<MessageId> next_msg_id_{0};
  std::vector<std::atomic<uint64_t>> addressed_;  // per group; last slot: ALL
  std::vector<std::unique_ptr<ReplicaState>> replicas_;
  std::unordered_map<DedupKey, MessageId, DedupKeyHash> sequenced_once_;
  std::vector<AuditEntry> audit_;
  bool shutdown_ = false;
};

}  // namespace optsmr
