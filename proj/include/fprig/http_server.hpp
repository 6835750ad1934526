#pragma once

// HTTP + WebSocket front end (Boost.Beast, one thread per connection).
//
//   GET  /healthz
//   GET  /sessions                         session ids
//   POST /sessions                         SessionConfig -> manifest
//   POST /sessions/{id}/ingest             envelope or array -> ack(s)
//   POST /sessions/{id}/rotate             seal the open segment now
//   POST /sessions/{id}/stop               -> final manifest
//   GET  /sessions/{id}/records?t0&t1&kinds
//   GET  /sessions/{id}/manifest
//   GET  /sessions/{id}/media/{path}
//   GET  /sessions/{id}/live               WebSocket live feed
//   POST /attest                           {session_id, segment_index, file_digest}
//   GET  /attestations/{id}                nonces withheld
//   POST /verify                           {session_id} -> chain report
//   GET  /console/...                      static operator console

#include <atomic>
#include <condition_variable>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "fprig/ingest_service.hpp"
#include "fprig/integrity.hpp"

namespace fprig {

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 0;  // 0 picks a free port
  std::filesystem::path console_dir;  // empty disables /console/
  std::size_t body_limit = 64 << 20;
};

class HttpServer {
 public:
  // `attestations` may be null; /attest, /attestations and /verify then answer 404.
  HttpServer(IngestService& ingest, AttestationStore* attestations, ServerOptions options);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds and starts accepting. Error(configuration) when the port is taken.
  void start();
  // Closes the listener and every open connection, then waits for them.
  void stop();
  int port() const { return port_; }
  std::string url() const;

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

}  // namespace fprig
