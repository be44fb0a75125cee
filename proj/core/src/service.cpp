#include "optsmr/service.hpp"

#include <chrono>
#include <cstdlib>
#include <random>
#include <thread>

namespace optsmr {

void ExecCost::pay() const {
  if (sleep_us > 0) std::this_thread::sleep_for(std::chrono::microseconds(sleep_us));
  if (spin_us > 0) {
    auto until = std::chrono::steady_clock::now() + std::chrono::microseconds(spin_us);
    while (std::chrono::steady_clock::now() < until) {
    }
  }
}

BTreeService::BTreeService(BTreeConfig tree_cfg, PartitionMap partitions, ExecCost cost)
    : tree_(tree_cfg), partitions_(std::move(partitions)), cost_(cost) {}

std::string BTreeService::execute(const Command& c) {
  if (!cost_.zero()) cost_.pay();
  switch (c.kind) {
    case CommandKind::Read: {
      auto v = tree_.read(c.key);
      return v ? outcome_value(*v) : outcome_absent();
    }
    case CommandKind::Update:
      return tree_.update(c.key, c.value.value_or("")) ? outcome_ok() : outcome_notfound();
    case CommandKind::Insert:
      tree_.insert(c.key, c.value.value_or(""));
      return outcome_ok();
    case CommandKind::Delete:
      return tree_.erase(c.key) ? outcome_ok() : outcome_notfound();
  }
  return outcome_notfound();
}

SafetyVerdict BTreeService::safety_check(const Command& c, unsigned thread) {
  return tree_.safety_check(c.kind, c.key, partitions_, thread);
}

void BTreeService::rollback(const Command&) {
  // The B+-tree safety check never executes anything, so there is nothing to
  // undo; reaching this is a protocol bug.
  rollback_calls_.fetch_add(1);
  std::abort();
}

std::string BTreeService::digest_hex() const { return tree_.digest_hex(); }

void preload_tree(BPlusTree& tree, uint64_t count, uint64_t max_key, uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_int_distribution<uint64_t> key_dist(0, max_key);
  uint64_t inserted = 0;
  while (inserted < count && tree.size() < max_key) {
    uint64_t k = key_dist(rng);
    if (tree.read(k)) continue;
    char buf[9];
    snprintf(buf, sizeof buf, "p%07llu", (unsigned long long)(inserted % 10000000));
    tree.insert(k, buf);
    ++inserted;
  }
}

}  // namespace optsmr
