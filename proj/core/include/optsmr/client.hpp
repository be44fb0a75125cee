#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "optsmr/command.hpp"
#include "optsmr/engine.hpp"
#include "optsmr/history.hpp"
#include "optsmr/multicast.hpp"
#include "optsmr/routing.hpp"

namespace optsmr {

struct InvokeResult {
  std::string output;
  bool optimistic = false;   // command was optimistically multicast
  bool failed_check = false; // its safety check failed somewhere
  uint64_t invoke_ns = 0;
  uint64_t respond_ns = 0;

  uint64_t latency_ns() const { return respond_ns - invoke_ns; }
};

/// Client proxy: maps an invocation to destination groups for the configured
/// engine mode, multicasts it, and blocks until the first response for the
/// command arrives; duplicates are dropped. Safe to drive from one thread.
class ClientProxy {
public:
  ClientProxy(uint32_t client_id, EngineMode mode, const RoutingConfig& routing,
              MulticastKernel& kernel, ResponseBus& bus, FailedPath failed_path,
              HistoryLog* history = nullptr, uint32_t transport_delay_us = 0);

  /// Blocks until the command's first response; throws EngineStopped if the
  /// kernel or bus shut down underneath the call.
  InvokeResult invoke(CommandKind kind, uint64_t key,
                      std::optional<std::string> value = std::nullopt);

  uint32_t client_id() const { return client_id_; }
  uint64_t issued() const { return next_seq_; }

  struct EngineStopped {};

private:
  GroupSet route(CommandKind kind, uint64_t key, Mode* mode_out) const;
  void hop_delay() const;

  uint32_t client_id_;
  EngineMode mode_;
  RoutingConfig routing_;
  MulticastKernel& kernel_;
  ResponseBus& bus_;
  FailedPath failed_path_;
  HistoryLog* history_;
  uint32_t transport_delay_us_;
  uint64_t next_seq_ = 0;
};

}  // namespace optsmr
