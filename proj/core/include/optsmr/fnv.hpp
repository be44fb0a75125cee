#pragma once

#include <cstdint>
#include <string_view>

namespace optsmr {

// 64-bit FNV-1a, used for tree digests and checker memoization.
inline constexpr uint64_t kFnvOffset = 1469598103934665603ULL;
inline constexpr uint64_t kFnvPrime = 1099511628211ULL;

inline uint64_t fnv1a_byte(uint64_t h, uint8_t b) {
  h ^= b;
  h *= kFnvPrime;
  return h;
}

inline uint64_t fnv1a_u64(uint64_t h, uint64_t v) {
  for (unsigned i = 0; i < 8; ++i) h = fnv1a_byte(h, uint8_t(v >> (i * 8)));
  return h;
}

inline uint64_t fnv1a_bytes(uint64_t h, std::string_view s) {
  for (char c : s) h = fnv1a_byte(h, uint8_t(c));
  return h;
}

}  // namespace optsmr
