#pragma once

#include <cstdint>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "optsmr/command.hpp"

namespace optsmr {

enum class EventKind : uint8_t { Invoke, Respond };

/// One line of the recorded history:
///   event,wallclock_ns,client_id,client_seq,command,key,outcome
/// where command is "kind" or "kind=<hexvalue>" and outcome is "-" on
/// invocations.
struct HistoryEvent {
  EventKind kind = EventKind::Invoke;
  uint64_t wallclock_ns = 0;
  uint32_t client_id = 0;
  uint64_t client_seq = 0;
  CommandKind command = CommandKind::Read;
  uint64_t key = 0;
  std::optional<std::string> arg;  // value argument carried by the command
  std::string outcome;             // canonical outcome; empty for invokes

  std::string line() const;
  static HistoryEvent parse(const std::string& line);  // throws on bad input
};

/// Thread-safe append sink for history events. Events are timestamped with a
/// process-wide monotonic clock so cross-client real-time precedence is
/// meaningful.
class HistoryLog {
public:
  void record(HistoryEvent ev);
  std::vector<HistoryEvent> snapshot() const;
  size_t size() const;

  void save(std::ostream& out) const;
  static std::vector<HistoryEvent> load(std::istream& in);

private:
  mutable std::mutex mu_;
  std::vector<HistoryEvent> events_;
};

/// Monotonic nanoseconds since process start.
uint64_t now_ns();

}  // namespace optsmr
