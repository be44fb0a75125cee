#include "optsmr/history.hpp"

#include <chrono>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace optsmr {

uint64_t now_ns() {
  static const auto t0 = std::chrono::steady_clock::now();
  return uint64_t(std::chrono::duration_cast<std::chrono::nanoseconds>(
                      std::chrono::steady_clock::now() - t0)
                      .count()) +
         1;  // keep 0 free as "before everything"
}

std::string HistoryEvent::line() const {
  std::ostringstream os;
  os << (kind == EventKind::Invoke ? "invoke" : "respond") << ',' << wallclock_ns << ','
     << client_id << ',' << client_seq << ',' << kind_name(command);
  if (arg) os << '=' << hex_encode(*arg);
  os << ',' << key << ',' << (kind == EventKind::Invoke ? "-" : outcome.c_str());
  return os.str();
}

HistoryEvent HistoryEvent::parse(const std::string& line) {
  std::vector<std::string> f;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      f.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  f.push_back(cur);
  if (f.size() != 7) throw std::invalid_argument("bad history line: " + line);

  HistoryEvent ev;
  if (f[0] == "invoke")
    ev.kind = EventKind::Invoke;
  else if (f[0] == "respond")
    ev.kind = EventKind::Respond;
  else
    throw std::invalid_argument("bad event kind: " + f[0]);
  ev.wallclock_ns = std::stoull(f[1]);
  ev.client_id = uint32_t(std::stoul(f[2]));
  ev.client_seq = std::stoull(f[3]);

  std::string cmd = f[4];
  auto eq = cmd.find('=');
  if (eq != std::string::npos) {
    ev.arg = hex_decode(cmd.substr(eq + 1));
    cmd = cmd.substr(0, eq);
  }
  auto k = kind_from_name(cmd);
  if (!k) throw std::invalid_argument("bad command kind: " + cmd);
  ev.command = *k;
  ev.key = std::stoull(f[5]);
  if (ev.kind == EventKind::Respond) ev.outcome = f[6];
  return ev;
}

void HistoryLog::record(HistoryEvent ev) {
  std::lock_guard<std::mutex> lk(mu_);
  events_.push_back(std::move(ev));
}

std::vector<HistoryEvent> HistoryLog::snapshot() const {
  std::lock_guard<std::mutex> lk(mu_);
  return events_;
}

size_t HistoryLog::size() const {
  std::lock_guard<std::mutex> lk(mu_);
  return events_.size();
}

void HistoryLog::save(std::ostream& out) const {
  for (const auto& ev : snapshot()) out << ev.line() << '\n';
}

std::vector<HistoryEvent> HistoryLog::load(std::istream& in) {
  std::vector<HistoryEvent> events;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    events.push_back(HistoryEvent::parse(line));
  }
  return events;
}

}  // namespace optsmr
