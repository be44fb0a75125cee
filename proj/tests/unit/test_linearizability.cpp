#include <doctest.h>

#include "optsmr/linearizability.hpp"

using namespace optsmr;

namespace {

// Compact history builder: op(client, seq, kind, key, arg, invoke, respond,
// outcome). respond == 0 leaves the operation pending.
Operation op(uint32_t client, uint64_t seq, CommandKind kind, uint64_t key,
             std::optional<std::string> arg, uint64_t inv, uint64_t resp,
             std::optional<std::string> outcome) {
  Operation o;
  o.client_id = client;
  o.client_seq = seq;
  o.kind = kind;
  o.key = key;
  o.arg = std::move(arg);
  o.invoke_ns = inv;
  if (resp) o.respond_ns = resp;
  o.outcome = std::move(outcome);
  return o;
}

}  // namespace

TEST_CASE("empty history is linearizable") {
  CHECK(check_linearizable(std::vector<Operation>{}).ok());
}

TEST_CASE("single-client history checks in program order") {
  std::vector<Operation> ops{
      op(0, 1, CommandKind::Insert, 5, "a", 10, 20, outcome_ok()),
      op(0, 2, CommandKind::Read, 5, {}, 30, 40, outcome_value("a")),
      op(0, 3, CommandKind::Delete, 5, {}, 50, 60, outcome_ok()),
      op(0, 4, CommandKind::Read, 5, {}, 70, 80, outcome_absent()),
  };
  auto res = check_linearizable(ops);
  REQUIRE(res.ok());
  CHECK(res.witness == std::vector<size_t>{0, 1, 2, 3});
}

TEST_CASE("stale read after a completed insert is a violation") {
  // c0 completes insert(5) strictly before c1 invokes read(5), yet the read
  // observes absent: neither ordering of the two operations explains it.
  std::vector<Operation> ops{
      op(0, 1, CommandKind::Insert, 5, "a", 10, 20, outcome_ok()),
      op(1, 1, CommandKind::Read, 5, {}, 30, 40, outcome_absent()),
  };
  auto res = check_linearizable(ops);
  CHECK(res.verdict == Verdict::Violation);
  CHECK(!res.evidence.empty());
}

TEST_CASE("overlapping insert and read may observe either state") {
  std::vector<Operation> absent_ok{
      op(0, 1, CommandKind::Insert, 5, "a", 10, 40, outcome_ok()),
      op(1, 1, CommandKind::Read, 5, {}, 20, 30, outcome_absent()),
  };
  CHECK(check_linearizable(absent_ok).ok());
  std::vector<Operation> value_ok{
      op(0, 1, CommandKind::Insert, 5, "a", 10, 40, outcome_ok()),
      op(1, 1, CommandKind::Read, 5, {}, 20, 30, outcome_value("a")),
  };
  CHECK(check_linearizable(value_ok).ok());
}

TEST_CASE("update and delete follow the sequential outcome alphabet") {
  std::vector<Operation> ops{
      op(0, 1, CommandKind::Update, 9, "x", 10, 20, outcome_notfound()),
      op(0, 2, CommandKind::Insert, 9, "y", 30, 40, outcome_ok()),
      op(0, 3, CommandKind::Update, 9, "z", 50, 60, outcome_ok()),
      op(0, 4, CommandKind::Read, 9, {}, 70, 80, outcome_value("z")),
      op(0, 5, CommandKind::Delete, 9, {}, 90, 95, outcome_ok()),
      op(0, 6, CommandKind::Delete, 9, {}, 96, 99, outcome_notfound()),
  };
  CHECK(check_linearizable(ops).ok());
  // flipping one outcome breaks it
  ops[3].outcome = outcome_value("y");
  CHECK(check_linearizable(ops).verdict == Verdict::Violation);
}

TEST_CASE("pending operations may be taken as effective or dropped") {
  // The pending insert must be linearized for the read to see "a".
  std::vector<Operation> visible{
      op(0, 1, CommandKind::Insert, 5, "a", 10, 0, std::nullopt),
      op(1, 1, CommandKind::Read, 5, {}, 20, 30, outcome_value("a")),
  };
  CHECK(check_linearizable(visible).ok());
  // And it may equally well never have taken effect.
  std::vector<Operation> invisible{
      op(0, 1, CommandKind::Insert, 5, "a", 10, 0, std::nullopt),
      op(1, 1, CommandKind::Read, 5, {}, 20, 30, outcome_absent()),
  };
  CHECK(check_linearizable(invisible).ok());
}

TEST_CASE("budget exhaustion reports inconclusive, never a verdict") {
  // Many concurrent writers to one key force a wide search frontier.
  std::vector<Operation> ops;
  for (uint32_t c = 0; c < 12; ++c)
    ops.push_back(op(c, 1, CommandKind::Insert, 1, "v" + std::to_string(c), 10, 1000,
                     outcome_ok()));
  ops.push_back(op(20, 1, CommandKind::Read, 1, {}, 2000, 2100, outcome_value("v7")));
  auto res = check_linearizable(ops, CheckerBudget{20});
  CHECK(res.verdict == Verdict::Inconclusive);
  CHECK(res.states_explored > 0);
}

TEST_CASE("checker is deterministic over the same history") {
  std::vector<Operation> ops{
      op(0, 1, CommandKind::Insert, 1, "a", 10, 40, outcome_ok()),
      op(1, 1, CommandKind::Insert, 1, "b", 15, 45, outcome_ok()),
      op(0, 2, CommandKind::Read, 1, {}, 50, 60, outcome_value("a")),
  };
  auto a = check_linearizable(ops);
  auto b = check_linearizable(ops);
  CHECK(a.verdict == b.verdict);
  CHECK(a.witness == b.witness);
  CHECK(a.states_explored == b.states_explored);
}

TEST_CASE("operations are reassembled from event streams") {
  std::vector<HistoryEvent> events;
  HistoryEvent inv;
  inv.kind = EventKind::Invoke;
  inv.wallclock_ns = 10;
  inv.client_id = 1;
  inv.client_seq = 1;
  inv.command = CommandKind::Insert;
  inv.key = 5;
  inv.arg = "a";
  events.push_back(inv);
  HistoryEvent resp = inv;
  resp.kind = EventKind::Respond;
  resp.wallclock_ns = 20;
  resp.outcome = outcome_ok();
  events.push_back(resp);
  HistoryEvent pend = inv;
  pend.client_seq = 2;
  pend.wallclock_ns = 30;
  events.push_back(pend);

  auto ops = operations_from_history(events);
  REQUIRE(ops.size() == 2);
  CHECK(!ops[0].pending());
  CHECK(ops[1].pending());

  std::vector<HistoryEvent> orphan{resp};
  CHECK_THROWS_AS(operations_from_history(orphan), std::invalid_argument);
}

TEST_CASE("convergence check compares digests") {
  CHECK(check_convergence({"aa", "aa", "aa"}));
  CHECK(!check_convergence({"aa", "ab"}));
  CHECK(check_convergence({"solo"}));
  CHECK_THROWS_AS(check_convergence({}), std::invalid_argument);
}
