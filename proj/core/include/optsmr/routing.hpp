#pragma once

#include <cstdint>
#include <vector>

#include "optsmr/command.hpp"
#include "optsmr/group.hpp"

namespace optsmr {

/// Static parameters of a replicated deployment: K worker threads per
/// replica, largest key M in the key space, n replicas tolerating f crashes.
struct RoutingConfig {
  unsigned threads = 1;      // K
  uint64_t max_key = 1;      // M
  unsigned replicas = 2;     // n
  unsigned tolerated = 1;    // f

  void validate() const;     // throws std::invalid_argument; requires n == f+1
};

/// Range-partitioning map from key to owning group, 0-based and clamped so
/// key == M lands in the last group.
unsigned group_of_key(uint64_t key, unsigned threads, uint64_t max_key);

/// Conservative command-to-group mapping: reads and updates go to the key's
/// group, structural commands go to every group.
GroupSet cc_g(CommandKind kind, uint64_t key, const RoutingConfig& cfg);

/// Optimistic command-to-group mapping: every command goes to the key's group.
GroupSet oc_g(CommandKind kind, uint64_t key, const RoutingConfig& cfg);

/// The K contiguous, disjoint key ranges covering [0, M], one per thread,
/// consistent with group_of_key.
class PartitionMap {
public:
  PartitionMap(unsigned threads, uint64_t max_key);

  unsigned threads() const { return unsigned(lo_.size()); }
  uint64_t max_key() const { return max_key_; }
  uint64_t lo(unsigned i) const { return lo_.at(i); }
  uint64_t hi(unsigned i) const { return hi_.at(i); }
  unsigned owner_of(uint64_t key) const;

private:
  std::vector<uint64_t> lo_, hi_;
  uint64_t max_key_;
};

}  // namespace optsmr
