#include "optsmr/routing.hpp"

#include <stdexcept>

namespace optsmr {

void RoutingConfig::validate() const {
  if (threads < 1) throw std::invalid_argument("thread count K must be >= 1");
  if (max_key < 1) throw std::invalid_argument("max key M must be >= 1");
  if (replicas < 1) throw std::invalid_argument("replica count n must be >= 1");
  if (replicas != tolerated + 1)
    throw std::invalid_argument("crash model requires n == f + 1");
}

unsigned group_of_key(uint64_t key, unsigned threads, uint64_t max_key) {
  if (key > max_key) throw std::out_of_range("key exceeds key space");
  // floor(key*K/M), 0-based, clamped so key == M stays in the last group.
  auto g = unsigned((unsigned __int128)key * threads / max_key);
  return g >= threads ? threads - 1 : g;
}

GroupSet cc_g(CommandKind kind, uint64_t key, const RoutingConfig& cfg) {
  if (kind == CommandKind::Read || kind == CommandKind::Update)
    return GroupSet::singleton(group_of_key(key, cfg.threads, cfg.max_key));
  return GroupSet::all_groups();
}

GroupSet oc_g(CommandKind kind, uint64_t key, const RoutingConfig& cfg) {
  (void)kind;
  return GroupSet::singleton(group_of_key(key, cfg.threads, cfg.max_key));
}

PartitionMap::PartitionMap(unsigned threads, uint64_t max_key) : max_key_(max_key) {
  if (threads < 1) throw std::invalid_argument("partition map needs >= 1 thread");
  if (max_key < 1) throw std::invalid_argument("partition map needs M >= 1");
  lo_.resize(threads);
  hi_.resize(threads);
  for (unsigned i = 0; i < threads; ++i) {
    // Smallest key with group index i: ceil(i*M/K).
    lo_[i] = ((unsigned __int128)i * max_key + threads - 1) / threads;
    hi_[i] = i + 1 == threads
                 ? max_key
                 : uint64_t(((unsigned __int128)(i + 1) * max_key + threads - 1) / threads) - 1;
  }
}

unsigned PartitionMap::owner_of(uint64_t key) const {
  return group_of_key(key, threads(), max_key_);
}

}  // namespace optsmr
