#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <random>
#include <sstream>
#include <thread>

#include "optsmr/multicast.hpp"

using namespace optsmr;

namespace {

std::vector<uint8_t> payload(uint8_t tag) { return std::vector<uint8_t>{tag}; }

std::vector<MessageId> drain(GroupStream& s, size_t n) {
  std::vector<MessageId> ids;
  for (size_t i = 0; i < n; ++i) {
    auto m = s.next();
    REQUIRE(m.has_value());
    ids.push_back(m->msg_id);
  }
  return ids;
}

}  // namespace

TEST_CASE("kernel topology") {
  CHECK_THROWS_AS(MulticastKernel(KernelConfig{0, 16, false}), std::invalid_argument);

  MulticastKernel k(KernelConfig{4, 1024, false});
  ReplicaId r = k.add_replica();
  // K indexed streams plus the all-groups stream are subscribable
  for (unsigned g = 0; g < 4; ++g) CHECK(k.stream(r, GroupId::indexed(g)).group().index() == g);
  CHECK(k.stream(r, GroupId::all()).group().is_all());
  CHECK_THROWS_AS(k.stream(r, GroupId::indexed(4)), std::out_of_range);
  CHECK_THROWS_AS(k.stream(7, GroupId::indexed(0)), std::out_of_range);
}

TEST_CASE("singleton goes to one group, all-groups to every thread") {
  MulticastKernel k(KernelConfig{2, 1024, false});
  ReplicaId r0 = k.add_replica(), r1 = k.add_replica();
  auto& s00 = k.stream(r0, GroupId::indexed(0));
  auto& s01 = k.stream(r0, GroupId::indexed(1));
  auto& s10 = k.stream(r1, GroupId::indexed(0));
  auto& s11 = k.stream(r1, GroupId::indexed(1));
  auto& all0 = k.stream(r0, GroupId::all());

  auto m1 = k.multicast(GroupSet::singleton(1), payload(1));
  auto m2 = k.multicast(GroupSet::all_groups(), payload(2));
  REQUIRE(m1);
  REQUIRE(m2);

  // group-1 streams deliver both; group-0 streams deliver only the broadcast
  auto v01 = drain(s01, 2);
  CHECK(v01 == std::vector<MessageId>{*m1, *m2});
  auto v11 = drain(s11, 2);
  CHECK(v11 == v01);  // identical order on both replicas
  CHECK(drain(s00, 1) == std::vector<MessageId>{*m2});
  CHECK(drain(s10, 1) == std::vector<MessageId>{*m2});
  // the all-groups stream carries only broadcast traffic
  CHECK(drain(all0, 1) == std::vector<MessageId>{*m2});

  CHECK(k.addressed_count(GroupId::indexed(1)) == 2);
  CHECK(k.addressed_count(GroupId::indexed(0)) == 1);
  CHECK(k.addressed_count(GroupId::all()) == 1);
}

TEST_CASE("deliver blocks until a message arrives") {
  MulticastKernel k(KernelConfig{1, 1024, false});
  ReplicaId r = k.add_replica();
  auto& s = k.stream(r, GroupId::indexed(0));
  std::atomic<bool> got{false};
  std::thread consumer([&] {
    auto m = s.next();
    got.store(m.has_value());
  });
  std::this_thread::sleep_for(std::chrono::milliseconds(30));
  CHECK(!got.load());
  k.multicast(GroupSet::singleton(0), payload(9));
  consumer.join();
  CHECK(got.load());
}

TEST_CASE("every multicast order yields one consistent merged view") {
  // Three messages, two groups: whatever order the sends happen in, every
  // stream observes the broadcast at the same relative position on every
  // replica, and the merged view follows the global sequence.
  std::vector<int> perm{0, 1, 2};
  std::sort(perm.begin(), perm.end());
  do {
    MulticastKernel k(KernelConfig{2, 1024, false});
    ReplicaId r0 = k.add_replica(), r1 = k.add_replica();
    auto& s00 = k.stream(r0, GroupId::indexed(0));
    auto& s01 = k.stream(r0, GroupId::indexed(1));
    auto& s10 = k.stream(r1, GroupId::indexed(0));
    auto& s11 = k.stream(r1, GroupId::indexed(1));

    MessageId sent[3] = {0, 0, 0};
    for (int which : perm) {
      GroupSet dest = which == 0   ? GroupSet::singleton(0)
                      : which == 1 ? GroupSet::singleton(1)
                                   : GroupSet::all_groups();
      sent[which] = *k.multicast(dest, payload(uint8_t(which)));
    }
    std::vector<std::pair<MessageId, uint64_t>> g0r0, g0r1, g1r0, g1r1;
    auto take = [](GroupStream& s, size_t n) {
      std::vector<std::pair<MessageId, uint64_t>> v;
      for (size_t i = 0; i < n; ++i) {
        auto m = s.next();
        REQUIRE(m);
        v.push_back({m->msg_id, m->global_seq});
      }
      return v;
    };
    g0r0 = take(s00, 2);
    g0r1 = take(s10, 2);
    g1r0 = take(s01, 2);
    g1r1 = take(s11, 2);
    CHECK(g0r0 == g0r1);
    CHECK(g1r0 == g1r1);
    for (auto* v : {&g0r0, &g1r0}) {
      REQUIRE((*v)[0].second < (*v)[1].second);  // ascending global_seq
    }
    // the broadcast carries the same id into both groups
    bool b0 = g0r0[0].first == sent[2] || g0r0[1].first == sent[2];
    bool b1 = g1r0[0].first == sent[2] || g1r0[1].first == sent[2];
    CHECK(b0);
    CHECK(b1);
  } while (std::next_permutation(perm.begin(), perm.end()));
}

TEST_CASE("crash stops one replica and leaves the rest running") {
  MulticastKernel k(KernelConfig{1, 1024, false});
  ReplicaId r0 = k.add_replica(), r1 = k.add_replica();
  auto& s0 = k.stream(r0, GroupId::indexed(0));
  auto& s1 = k.stream(r1, GroupId::indexed(0));

  k.multicast(GroupSet::singleton(0), payload(1));
  CHECK(s1.next().has_value());

  std::thread blocked([&] { CHECK(!s1.next().has_value()); });
  std::this_thread::sleep_for(std::chrono::milliseconds(20));
  k.inject_crash(r1);
  blocked.join();
  k.inject_crash(r1);  // idempotent
  CHECK_THROWS_AS(k.inject_crash(99), std::out_of_range);
  CHECK(!k.replica_live(r1));

  // the surviving replica still delivers everything
  k.multicast(GroupSet::singleton(0), payload(2));
  CHECK(drain(s0, 2).size() == 2);
}

TEST_CASE("shutdown unblocks consumers and rejects senders") {
  MulticastKernel k(KernelConfig{1, 1024, false});
  ReplicaId r = k.add_replica();
  auto& s = k.stream(r, GroupId::indexed(0));
  std::thread blocked([&] { CHECK(!s.next().has_value()); });
  std::this_thread::sleep_for(std::chrono::milliseconds(20));
  k.shutdown();
  blocked.join();
  CHECK(!k.multicast(GroupSet::singleton(0), payload(1)).has_value());
}

TEST_CASE("sequence-once multicast suppresses duplicate retries") {
  MulticastKernel k(KernelConfig{1, 1024, false});
  ReplicaId r = k.add_replica();
  auto& s = k.stream(r, GroupId::indexed(0));
  DedupKey key{7, 9};
  auto first = k.multicast_once(GroupSet::singleton(0), payload(1), key);
  auto second = k.multicast_once(GroupSet::singleton(0), payload(1), key);
  REQUIRE(first);
  CHECK(second == first);
  CHECK(k.sequenced_count() == 1);
  CHECK(drain(s, 1) == std::vector<MessageId>{*first});
}

TEST_CASE("bounded streams push back on producers") {
  MulticastKernel k(KernelConfig{1, 4, false});
  ReplicaId r = k.add_replica();
  auto& s = k.stream(r, GroupId::indexed(0));
  std::atomic<int> sent{0};
  std::thread producer([&] {
    for (int i = 0; i < 10; ++i) {
      k.multicast(GroupSet::singleton(0), payload(uint8_t(i)));
      sent.fetch_add(1);
    }
  });
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  CHECK(sent.load() == 4);  // capacity reached, producer is blocked
  auto ids = drain(s, 10);  // draining releases it
  producer.join();
  CHECK(sent.load() == 10);
  for (size_t i = 1; i < ids.size(); ++i) CHECK(ids[i - 1] < ids[i]);
}

TEST_CASE("audit log records the sequencing order") {
  MulticastKernel k(KernelConfig{2, 1024, true});
  k.add_replica();
  k.multicast(GroupSet::singleton(1), payload(1));
  k.multicast(GroupSet::all_groups(), payload(2));
  std::ostringstream out;
  k.dump_sequenced_log(out);
  CHECK(out.str() == "1,1,g1\n2,2,all\n");

  MulticastKernel plain(KernelConfig{1, 16, false});
  std::ostringstream sink;
  CHECK_THROWS_AS(plain.dump_sequenced_log(sink), std::logic_error);
}

TEST_CASE("no duplication and agreement at quiescence under concurrency") {
  MulticastKernel k(KernelConfig{2, 4096, true});
  ReplicaId r0 = k.add_replica(), r1 = k.add_replica();
  auto& s00 = k.stream(r0, GroupId::indexed(0));
  auto& s01 = k.stream(r0, GroupId::indexed(1));
  auto& s10 = k.stream(r1, GroupId::indexed(0));
  auto& s11 = k.stream(r1, GroupId::indexed(1));

  const int per_producer = 500;
  std::vector<std::thread> producers;
  for (int p = 0; p < 3; ++p)
    producers.emplace_back([&, p] {
      std::mt19937_64 rng(p);
      for (int i = 0; i < per_producer; ++i) {
        unsigned pick = rng() % 3;
        GroupSet dest = pick == 2 ? GroupSet::all_groups() : GroupSet::singleton(pick);
        k.multicast(dest, payload(uint8_t(p)));
      }
    });

  std::vector<std::vector<MessageId>> seen(4);
  auto consume = [&](GroupStream& s, unsigned slot) {
    while (auto m = s.next()) seen[slot].push_back(m->msg_id);
  };
  // consumers race the producers and drain until shutdown
  std::vector<std::thread> consumers;
  consumers.emplace_back([&] { consume(s00, 0); });
  consumers.emplace_back([&] { consume(s01, 1); });
  consumers.emplace_back([&] { consume(s10, 2); });
  consumers.emplace_back([&] { consume(s11, 3); });
  for (auto& t : producers) t.join();
  // quiescence: every stream has delivered everything addressed to it
  GroupStream* streams[] = {&s00, &s01, &s10, &s11};
  GroupId groups[] = {GroupId::indexed(0), GroupId::indexed(1), GroupId::indexed(0),
                      GroupId::indexed(1)};
  for (int i = 0; i < 4; ++i)
    while (streams[i]->delivered() < k.addressed_count(groups[i]))
      std::this_thread::sleep_for(std::chrono::microseconds(100));
  k.shutdown();
  for (auto& t : consumers) t.join();

  // per-group equality across replicas
  CHECK(seen[0] == seen[2]);
  CHECK(seen[1] == seen[3]);
  // agreement: exactly the addressed messages were delivered
  auto audit = k.audit_log();
  std::vector<MessageId> want_g0, want_g1;
  for (const auto& e : audit) {
    if (e.dest.is_all() || e.dest.index() == 0) want_g0.push_back(e.msg_id);
    if (e.dest.is_all() || e.dest.index() == 1) want_g1.push_back(e.msg_id);
  }
  CHECK(seen[0] == want_g0);
  CHECK(seen[1] == want_g1);
}
