#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>

#include "optsmr/btree.hpp"
#include "optsmr/command.hpp"
#include "optsmr/routing.hpp"

namespace optsmr {

/// Replicated service interface driven by the replica threads. Mutating entry
/// points are not internally synchronized: the replication protocol
/// guarantees disjoint access in parallel mode and exclusive access in
/// synchronous mode.
class Service {
public:
  virtual ~Service() = default;

  /// Applies the command and returns its canonical outcome string.
  virtual std::string execute(const Command& c) = 0;

  /// Execution-free predicate for optimistically routed structural commands.
  virtual SafetyVerdict safety_check(const Command& c, unsigned thread) = 0;

  /// Undo hook for services whose safety check requires execution. The
  /// B+-tree check never executes, so this must never be reached.
  virtual void rollback(const Command& c) = 0;

  virtual std::string digest_hex() const = 0;
};

using ServiceFactory = std::function<std::unique_ptr<Service>()>;

/// Synthetic per-command execution cost, used by the benchmark scenarios to
/// model service work that is heavier than a hot-cache desk-scale tree op.
/// The sleep part does not occupy a core, so K workers scale past the box's
/// core count; the spin part is CPU-bound.
struct ExecCost {
  uint32_t spin_us = 0;
  uint32_t sleep_us = 0;

  bool zero() const { return spin_us == 0 && sleep_us == 0; }
  void pay() const;
};

class BTreeService : public Service {
public:
  BTreeService(BTreeConfig tree_cfg, PartitionMap partitions, ExecCost cost = {});

  std::string execute(const Command& c) override;
  SafetyVerdict safety_check(const Command& c, unsigned thread) override;
  void rollback(const Command& c) override;
  std::string digest_hex() const override;

  BPlusTree& tree() { return tree_; }
  const BPlusTree& tree() const { return tree_; }
  uint64_t rollback_calls() const { return rollback_calls_.load(); }

private:
  BPlusTree tree_;
  PartitionMap partitions_;
  ExecCost cost_;
  std::atomic<uint64_t> rollback_calls_{0};
};

/// Deterministically preloads `count` distinct uniform keys derived from
/// `seed`; every replica built with the same arguments holds an identical
/// tree.
void preload_tree(BPlusTree& tree, uint64_t count, uint64_t max_key, uint64_t seed);

}  // namespace optsmr
