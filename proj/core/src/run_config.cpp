#include "optsmr/run_config.hpp"

#include <sstream>
#include <stdexcept>

namespace optsmr {

std::string Mix::tag() const {
  std::ostringstream os;
  os << "r" << read << "u" << update << "i" << insert << "d" << del;
  return os.str();
}

RoutingConfig RunConfig::routing() const {
  RoutingConfig r;
  r.threads = threads;
  r.max_key = max_key;
  r.replicas = replicas;
  r.tolerated = replicas - 1;
  return r;
}

void RunConfig::validate_and_normalize() {
  if (mode == EngineMode::SequentialSMR) threads = 1;
  if (threads < 1) throw std::invalid_argument("threads must be >= 1");
  if (replicas < 1) throw std::invalid_argument("replicas must be >= 1");
  if (max_key < 1) throw std::invalid_argument("max-key must be >= 1");
  if (fanout < 3) throw std::invalid_argument("fanout must be >= 3");
  if (mix.sum() != 100) throw std::invalid_argument("mix percentages must sum to 100");
  if (clients < 1) throw std::invalid_argument("clients must be >= 1");
  if (duration_s < 0 || discard_s < 0) throw std::invalid_argument("negative duration");
  if (duration_s > 0 && duration_s <= 2 * discard_s)
    throw std::invalid_argument("duration must exceed twice the discard window");
  if (duration_s == 0 && ops == 0)
    throw std::invalid_argument("either a duration or a command count is required");
  if (preload > max_key)
    throw std::invalid_argument("preload cannot exceed the key space");
  if (stream_capacity < 1) throw std::invalid_argument("stream capacity must be >= 1");
  if (watchdog_s <= 0) throw std::invalid_argument("watchdog must be positive");
  routing().validate();
}

}  // namespace optsmr
