#include <doctest.h>

#include <stdexcept>

#include "optsmr/routing.hpp"

using namespace optsmr;

TEST_CASE("group_of_key maps boundaries and midpoints") {
  const uint64_t M = 1'000'000;
  CHECK(group_of_key(0, 8, M) == 0);
  CHECK(group_of_key(M, 8, M) == 7);  // clamped so k == M stays in range
  CHECK(group_of_key(M / 2, 8, M) == 4);
  CHECK(group_of_key(124'999, 8, M) == 0);
  CHECK(group_of_key(125'000, 8, M) == 1);
  CHECK_THROWS_AS(group_of_key(M + 1, 8, M), std::out_of_range);
}

TEST_CASE("group_of_key partitions the whole key space") {
  // Exhaustive sweep at small M: the key-to-group map must be total,
  // monotone, and agree with the partition map everywhere.
  for (unsigned K : {1u, 2u, 3u, 5u, 8u}) {
    for (uint64_t M : {1ull, 7ull, 64ull, 1000ull}) {
      PartitionMap pm(K, M);
      unsigned prev = 0;
      for (uint64_t k = 0; k <= M; ++k) {
        unsigned g = group_of_key(k, K, M);
        REQUIRE(g < K);
        REQUIRE(g >= prev);
        REQUIRE(pm.owner_of(k) == g);
        REQUIRE(pm.lo(g) <= k);
        REQUIRE(k <= pm.hi(g));
        prev = g;
      }
    }
  }
}

TEST_CASE("partition map ranges are contiguous and cover [0, M]") {
  for (unsigned K : {1u, 2u, 4u, 8u}) {
    PartitionMap pm(K, 1'000'000);
    CHECK(pm.lo(0) == 0);
    CHECK(pm.hi(K - 1) == 1'000'000);
    for (unsigned i = 0; i + 1 < K; ++i) CHECK(pm.hi(i) + 1 == pm.lo(i + 1));
  }
}

TEST_CASE("conservative mapping sends structural commands everywhere") {
  RoutingConfig cfg{8, 1'000'000, 2, 1};
  uint64_t k = 123'456;
  CHECK(cc_g(CommandKind::Read, k, cfg) ==
        GroupSet::singleton(group_of_key(k, cfg.threads, cfg.max_key)));
  CHECK(cc_g(CommandKind::Update, k, cfg) == cc_g(CommandKind::Read, k, cfg));
  CHECK(cc_g(CommandKind::Insert, k, cfg) == GroupSet::all_groups());
  CHECK(cc_g(CommandKind::Delete, k, cfg) == GroupSet::all_groups());
}

TEST_CASE("optimistic mapping always picks the key's group") {
  RoutingConfig cfg{8, 1'000'000, 2, 1};
  for (auto kind : {CommandKind::Read, CommandKind::Update, CommandKind::Insert,
                    CommandKind::Delete}) {
    CHECK(oc_g(kind, 42, cfg) == GroupSet::singleton(0));
  }
  // Reads coincide with the conservative mapping.
  CHECK(oc_g(CommandKind::Read, 999, cfg) == cc_g(CommandKind::Read, 999, cfg));
  // Composition with the clamp: the largest key lands in the last group.
  CHECK(oc_g(CommandKind::Delete, cfg.max_key, cfg) == GroupSet::singleton(7));
}

TEST_CASE("routing config enforces the crash model") {
  RoutingConfig ok{4, 1000, 2, 1};
  CHECK_NOTHROW(ok.validate());
  RoutingConfig bad = ok;
  bad.tolerated = 2;  // n != f + 1
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  RoutingConfig zero = ok;
  zero.threads = 0;
  CHECK_THROWS_AS(zero.validate(), std::invalid_argument);
}

TEST_CASE("group identities") {
  CHECK(GroupId::all().is_all());
  CHECK(!GroupId::indexed(3).is_all());
  CHECK(GroupId::indexed(3).index() == 3);
  CHECK(GroupId::indexed(3).str() == "g3");
  CHECK(GroupId::all().str() == "all");
  CHECK(GroupSet::all_groups().min_index() == 0);
  CHECK(GroupSet::singleton(5).min_index() == 5);
}
