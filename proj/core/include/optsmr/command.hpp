#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "optsmr/group.hpp"

namespace optsmr {

enum class CommandKind : uint8_t { Read = 0, Update = 1, Insert = 2, Delete = 3 };

/// Reads and updates never change the tree structure; inserts and deletes may.
inline bool is_structural_kind(CommandKind k) {
  return k == CommandKind::Insert || k == CommandKind::Delete;
}

const char* kind_name(CommandKind k);
std::optional<CommandKind> kind_from_name(std::string_view s);

/// Routing mode a command was multicast with. A command transitions at most
/// once, Optimistic -> Conservative, never back.
enum class Mode : uint8_t { Optimistic = 0, Conservative = 1 };

enum class EngineMode { SequentialSMR, PSMR, OptPSMR };

const char* engine_mode_name(EngineMode m);
std::optional<EngineMode> engine_mode_from_name(std::string_view s);

/// Per-invocation identity: unique across the run, stable across a
/// conservative retry of the same invocation.
struct CmdId {
  uint32_t client_id = 0;
  uint64_t client_seq = 0;

  friend bool operator==(const CmdId&, const CmdId&) = default;
};

struct Command {
  CmdId id;
  CommandKind kind = CommandKind::Read;
  uint64_t key = 0;
  std::optional<std::string> value;  // present iff kind is Update or Insert
  Mode mode = Mode::Conservative;

  std::string describe() const;  // "insert=<hexvalue>" style, for history logs
};

std::vector<uint8_t> encode_command(const Command& c);
Command decode_command(const uint8_t* data, size_t len);

/// Canonical outcome strings shared by the service, the history log, and the
/// sequential model: "ok", "notfound", "absent", "val=<hex>".
std::string outcome_ok();
std::string outcome_notfound();
std::string outcome_absent();
std::string outcome_value(std::string_view v);

std::string hex_encode(std::string_view raw);
std::string hex_decode(std::string_view hex);

struct Response {
  CmdId id;
  std::string output;        // canonical outcome; empty when check_failed
  uint32_t replica_id = 0;
  uint32_t executing_thread = 0;
  Mode executed_mode = Mode::Conservative;
  bool check_failed = false;  // resubmission notice, not a command outcome
};

}  // namespace optsmr
