#include "optsmr/client.hpp"

#include <chrono>
#include <thread>

namespace optsmr {

ClientProxy::ClientProxy(uint32_t client_id, EngineMode mode, const RoutingConfig& routing,
                         MulticastKernel& kernel, ResponseBus& bus, FailedPath failed_path,
                         HistoryLog* history, uint32_t transport_delay_us)
    : client_id_(client_id),
      mode_(mode),
      routing_(routing),
      kernel_(kernel),
      bus_(bus),
      failed_path_(failed_path),
      history_(history),
      transport_delay_us_(transport_delay_us) {}

void ClientProxy::hop_delay() const {
  if (transport_delay_us_ > 0)
    std::this_thread::sleep_for(std::chrono::microseconds(transport_delay_us_));
}

GroupSet ClientProxy::route(CommandKind kind, uint64_t key, Mode* mode_out) const {
  switch (mode_) {
    case EngineMode::SequentialSMR:
      // Atomic broadcast as the one-group special case: K == 1.
      *mode_out = Mode::Conservative;
      return GroupSet::singleton(0);
    case EngineMode::PSMR:
      *mode_out = Mode::Conservative;
      return cc_g(kind, key, routing_);
    case EngineMode::OptPSMR:
      // Optimism only matters where the two mappings disagree; reads and
      // updates are conservatively-equal singletons and are never checked.
      *mode_out = is_structural_kind(kind) ? Mode::Optimistic : Mode::Conservative;
      return oc_g(kind, key, routing_);
  }
  *mode_out = Mode::Conservative;
  return GroupSet::all_groups();
}

InvokeResult ClientProxy::invoke(CommandKind kind, uint64_t key,
                                 std::optional<std::string> value) {
  Command cmd;
  cmd.id = CmdId{client_id_, ++next_seq_};
  cmd.kind = kind;
  cmd.key = key;
  cmd.value = std::move(value);
  GroupSet dest = route(kind, key, &cmd.mode);

  InvokeResult res;
  res.optimistic = cmd.mode == Mode::Optimistic;
  res.invoke_ns = now_ns();
  if (history_) {
    HistoryEvent ev;
    ev.kind = EventKind::Invoke;
    ev.wallclock_ns = res.invoke_ns;
    ev.client_id = client_id_;
    ev.client_seq = cmd.id.client_seq;
    ev.command = kind;
    ev.key = key;
    ev.arg = cmd.value;
    history_->record(std::move(ev));
  }

  hop_delay();  // client -> agreement layer
  if (!kernel_.multicast(dest, encode_command(cmd))) throw EngineStopped{};

  bool resubmitted = false;
  for (;;) {
    auto r = bus_.wait(client_id_);
    if (!r) throw EngineStopped{};
    if (!(r->id == cmd.id)) continue;  // stale duplicate of an older command
    hop_delay();                       // replica -> client

    if (r->check_failed) {
      res.failed_check = true;
      if (resubmitted) continue;  // another replica noticed the same fail
      resubmitted = true;
      // Resubmit conservatively with the same command identity.
      cmd.mode = Mode::Conservative;
      GroupSet retry_dest = cc_g(kind, key, routing_);
      hop_delay();  // client -> agreement layer, second traversal
      if (!kernel_.multicast(retry_dest, encode_command(cmd))) throw EngineStopped{};
      continue;
    }

    // First response wins; duplicates from other replicas are dropped on the
    // next invocation's scan.
    if (r->executed_mode == Mode::Conservative && res.optimistic) res.failed_check = true;
    res.output = r->output;
    res.respond_ns = now_ns();
    break;
  }

  if (history_) {
    HistoryEvent ev;
    ev.kind = EventKind::Respond;
    ev.wallclock_ns = res.respond_ns;
    ev.client_id = client_id_;
    ev.client_seq = cmd.id.client_seq;
    ev.command = kind;
    ev.key = key;
    ev.arg = cmd.value;
    ev.outcome = res.output;
    history_->record(std::move(ev));
  }
  return res;
}

}  // namespace optsmr
