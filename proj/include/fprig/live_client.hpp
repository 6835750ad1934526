#pragma once

// WebSocket subscriber for GET /sessions/{id}/live.

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "fprig/session_model.hpp"

namespace fprig {

class LiveClient {
 public:
  // Connects and completes the handshake; Error(transport) on failure.
  LiveClient(std::string_view endpoint, const std::string& session_id);
  ~LiveClient();
  LiveClient(const LiveClient&) = delete;
  LiveClient& operator=(const LiveClient&) = delete;

  // Next event, or nullopt once `timeout` passes or the feed has closed.
  std::optional<Json> next(std::chrono::milliseconds timeout);
  bool closed() const;
  void close();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace fprig
