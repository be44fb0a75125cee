#include <doctest.h>

#include <random>
#include <sstream>

#include "optsmr/command.hpp"
#include "optsmr/history.hpp"

using namespace optsmr;

TEST_CASE("command encode/decode round trip") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 500; ++i) {
    Command c;
    c.id = CmdId{uint32_t(rng() % 1000), rng()};
    c.kind = CommandKind(rng() % 4);
    c.key = rng();
    c.mode = (rng() % 2) ? Mode::Optimistic : Mode::Conservative;
    if (c.kind == CommandKind::Update || c.kind == CommandKind::Insert) {
      std::string v(rng() % 16, 'a');
      for (auto& ch : v) ch = char('a' + rng() % 26);
      c.value = v;
    }
    auto bytes = encode_command(c);
    Command back = decode_command(bytes.data(), bytes.size());
    REQUIRE(back.id == c.id);
    REQUIRE(back.kind == c.kind);
    REQUIRE(back.key == c.key);
    REQUIRE(back.mode == c.mode);
    REQUIRE(back.value == c.value);
  }
}

TEST_CASE("decode rejects malformed payloads") {
  Command c;
  c.value = "hello";
  c.kind = CommandKind::Insert;
  auto bytes = encode_command(c);
  CHECK_THROWS_AS(decode_command(bytes.data(), bytes.size() - 3), std::invalid_argument);
  bytes[12] = 17;  // kind byte
  CHECK_THROWS_AS(decode_command(bytes.data(), bytes.size()), std::invalid_argument);
}

TEST_CASE("hex round trip") {
  CHECK(hex_encode("") == "");
  CHECK(hex_encode("ab") == "6162");
  CHECK(hex_decode("6162") == "ab");
  CHECK(hex_decode(hex_encode(std::string("\x00\xff\x10", 3))) ==
        std::string("\x00\xff\x10", 3));
  CHECK_THROWS_AS(hex_decode("abc"), std::invalid_argument);
  CHECK_THROWS_AS(hex_decode("zz"), std::invalid_argument);
}

TEST_CASE("names round trip") {
  for (auto k : {CommandKind::Read, CommandKind::Update, CommandKind::Insert,
                 CommandKind::Delete})
    CHECK(kind_from_name(kind_name(k)) == k);
  CHECK(!kind_from_name("scan").has_value());
  for (auto m : {EngineMode::SequentialSMR, EngineMode::PSMR, EngineMode::OptPSMR})
    CHECK(engine_mode_from_name(engine_mode_name(m)) == m);
}

TEST_CASE("history event line format") {
  HistoryEvent ev;
  ev.kind = EventKind::Invoke;
  ev.wallclock_ns = 12345;
  ev.client_id = 2;
  ev.client_seq = 17;
  ev.command = CommandKind::Insert;
  ev.key = 42;
  ev.arg = "vv";
  CHECK(ev.line() == "invoke,12345,2,17,insert=7676,42,-");

  HistoryEvent r = HistoryEvent::parse("respond,12400,2,17,insert=7676,42,ok");
  CHECK(r.kind == EventKind::Respond);
  CHECK(r.wallclock_ns == 12400);
  CHECK(r.client_id == 2);
  CHECK(r.client_seq == 17);
  CHECK(r.command == CommandKind::Insert);
  CHECK(r.arg == "vv");
  CHECK(r.key == 42);
  CHECK(r.outcome == "ok");

  CHECK_THROWS_AS(HistoryEvent::parse("bogus,1,2"), std::invalid_argument);
  CHECK_THROWS_AS(HistoryEvent::parse("tick,1,2,3,read,4,-"), std::invalid_argument);
}

TEST_CASE("history log save/load round trip") {
  HistoryLog log;
  for (int i = 0; i < 20; ++i) {
    HistoryEvent ev;
    ev.kind = i % 2 ? EventKind::Respond : EventKind::Invoke;
    ev.wallclock_ns = uint64_t(i) * 10;
    ev.client_id = uint32_t(i % 3);
    ev.client_seq = uint64_t(i / 2 + 1);
    ev.command = CommandKind(i % 4);
    ev.key = uint64_t(i);
    if (ev.command == CommandKind::Insert) ev.arg = "x";
    if (ev.kind == EventKind::Respond) ev.outcome = "ok";
    log.record(ev);
  }
  std::ostringstream out;
  log.save(out);
  std::istringstream in(out.str());
  auto back = HistoryLog::load(in);
  REQUIRE(back.size() == log.size());
  auto orig = log.snapshot();
  for (size_t i = 0; i < back.size(); ++i) CHECK(back[i].line() == orig[i].line());
}

TEST_CASE("outcome helpers") {
  CHECK(outcome_ok() == "ok");
  CHECK(outcome_notfound() == "notfound");
  CHECK(outcome_absent() == "absent");
  CHECK(outcome_value("ab") == "val=6162");
}
