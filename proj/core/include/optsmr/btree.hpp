#pragma once

#include <atomic>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "optsmr/command.hpp"
#include "optsmr/routing.hpp"

namespace optsmr {

struct BTreeConfig {
  unsigned fanout = 64;        // max children per inner node == max entries per leaf
  uint64_t max_key = 1u << 20; // M; locate ranges are clamped to [0, M]
};

/// A leaf and the closed key range [lo, hi] that tree search routes to it.
struct LeafLocator {
  const void* leaf = nullptr;
  uint64_t leaf_id = 0;      // stable node id, comparable with OpStats node ids
  uint64_t lo = 0;
  uint64_t hi = 0;
  size_t entries = 0;        // current entry count of the leaf
  bool key_present = false;  // whether the looked-up key is stored in it
};

enum class FailReason : uint8_t {
  StructuralChange,
  LeftBoundaryOverlap,
  RightBoundaryOverlap,
};

const char* fail_reason_name(FailReason r);

/// Outcome of the replica-side safety check. Fail carries the first violated
/// condition in order (a) structural, (b) left boundary, (c) right boundary.
class SafetyVerdict {
public:
  static SafetyVerdict pass() { return SafetyVerdict(std::nullopt); }
  static SafetyVerdict fail(FailReason r) { return SafetyVerdict(r); }

  bool passed() const { return !reason_.has_value(); }
  FailReason reason() const { return *reason_; }
  std::string str() const;

  friend bool operator==(const SafetyVerdict&, const SafetyVerdict&) = default;

private:
  explicit SafetyVerdict(std::optional<FailReason> r) : reason_(r) {}
  std::optional<FailReason> reason_;
};

/// Counters describing the last mutating operation; node ids are collected
/// only while instrumentation is enabled.
struct OpStats {
  uint64_t splits = 0;
  uint64_t merges = 0;
  uint64_t redistributions = 0;
  std::vector<uint64_t> mutated_nodes;

  bool structural() const { return splits + merges + redistributions > 0; }
};

/// In-memory B+-tree keyed by unsigned 64-bit integers. All leaves sit at
/// equal depth; non-root nodes keep between ceil(F/2) and F entries/children.
/// Search routes key == separator to the right child. The tree performs no
/// internal locking; callers serialize structural access.
class BPlusTree {
public:
  explicit BPlusTree(BTreeConfig cfg = {});
  BPlusTree(const BPlusTree& other);  // deep copy, used by test oracles
  BPlusTree(BPlusTree&& other) noexcept;
  BPlusTree& operator=(BPlusTree&& other) noexcept;
  ~BPlusTree();

  const BTreeConfig& config() const { return cfg_; }

  std::optional<std::string> read(uint64_t key) const;
  /// Replaces in place; returns false (not-found) when the key is absent.
  bool update(uint64_t key, std::string value);
  /// Inserts, overwriting silently if the key exists.
  void insert(uint64_t key, std::string value);
  /// Returns false (not-found) when the key is absent.
  bool erase(uint64_t key);

  LeafLocator locate_leaf(uint64_t key) const;

  /// Execution-free check deciding whether an optimistically routed insert or
  /// delete can run in parallel mode on thread `thread`. Requires a
  /// structural kind; reads and updates are never checked.
  SafetyVerdict safety_check(CommandKind kind, uint64_t key,
                             const PartitionMap& partitions,
                             unsigned thread) const;

  /// Fingerprint over both contents and node shapes; equal digests mean equal
  /// key-value contents laid out in an identical structure.
  uint64_t digest() const;
  std::string digest_hex() const;
  /// Shape-only fingerprint (node arities and separators, no values).
  uint64_t structure_signature() const;

  size_t size() const { return size_.load(std::memory_order_relaxed); }
  unsigned height() const { return height_; }
  size_t leaf_count() const;

  void export_snapshot(std::ostream& out) const;  // sorted "key,value" lines
  static BPlusTree import_snapshot(std::istream& in, BTreeConfig cfg = {});

  const OpStats& last_op_stats() const { return last_op_; }
  void set_instrumentation(bool on) { instrument_ = on; }

  /// Structural invariants (depth, occupancy, ordering); test support.
  bool check_invariants(std::string* why = nullptr) const;

  struct Node;  // opaque

private:
  BTreeConfig cfg_;
  std::unique_ptr<Node> root_;
  // Entry count; bumped by concurrent disjoint-leaf executions, hence atomic.
  std::atomic<size_t> size_{0};
  unsigned height_ = 1;
  uint64_t next_node_id_ = 0;
  bool instrument_ = false;
  OpStats last_op_;

  unsigned leaf_cap() const { return cfg_.fanout; }
  unsigned leaf_min() const { return (cfg_.fanout + 1) / 2; }
  unsigned inner_cap() const { return cfg_.fanout; }
  unsigned inner_min() const { return (cfg_.fanout + 1) / 2; }

  std::unique_ptr<Node> make_leaf();
  std::unique_ptr<Node> make_inner();
  void touch(const Node* n);

  struct SplitResult;
  std::optional<SplitResult> insert_rec(Node& n, uint64_t key, std::string&& value);
  bool erase_rec(Node& n, uint64_t key);
  void fix_child_underflow(Node& parent, size_t idx);
};

}  // namespace optsmr
