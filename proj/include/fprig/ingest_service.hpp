#pragma once

// The laptop-side service: orders and buffers sensor records, runs the
// analyzers, rotates and seals segments into the attestation chain, and fans
// accepted records out to live subscribers.
//
// Segment k covers session time [k*D, (k+1)*D). A sensor record at or past
// the open segment's end seals it first, so rotation follows data time and a
// replayed log reproduces the same files. Analyzers run inline on the ingest
// path for the same reason. The open segment lives in memory only: a crash
// loses it, and a restarted service resumes at the next unsealed index.

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fprig/ingest_types.hpp"
#include "fprig/integrity.hpp"
#include "fprig/session_model.hpp"
#include "fprig/session_store.hpp"

namespace fprig {

/// One live-feed subscription. Events are JSON objects:
///   {"event":"record","feed_seq":n,"record":{...}}
///   {"event":"tone","feed_seq":n,"t_ms":t}
///   {"event":"segment_sealed","feed_seq":n,"segment_index":i,"attested":bool}
///   {"event":"sealed","feed_seq":n,"manifest":{...}}   (terminal)
/// feed_seq increases by one per event within a session, for dedup.
class LiveQueue {
 public:
  explicit LiveQueue(std::size_t limit) : limit_(limit) {}

  // Blocks up to `timeout`; nullopt on timeout or after the terminal event.
  std::optional<Json> pop(std::chrono::milliseconds timeout);
  bool finished() const;

  void push(Json event);
  // Queues a terminal event; nothing is accepted afterwards.
  void finish(Json event);

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Json> events_;
  std::size_t limit_;
  bool closing_ = false;  // terminal event queued
};

struct IngestOptions {
  std::function<std::int64_t()> wall_clock_ms;  // manifest anchor; defaults to the system clock
  std::size_t live_queue_limit = 1 << 16;
};

class IngestService {
 public:
  /// Loads every session on disk. Sessions still marked recording resume at
  /// their next unsealed segment with analyzer state rebuilt from the sealed
  /// records.
  IngestService(SessionStore& store, Attestor& attestor, IngestOptions options = {});
  ~IngestService();
  IngestService(const IngestService&) = delete;
  IngestService& operator=(const IngestService&) = delete;

  SessionManifest start_session(const SessionConfig& config);

  /// Appends one envelope. A sequence number at or below the stream's
  /// high-water mark is acked as a duplicate with no other effect.
  /// Errors: not_found, validation, ordering (t_ms regression), conflict
  /// (new data for a sealed session).
  Ack ingest(const IngestEnvelope& envelope);
  // Processes in order; the first failure throws, earlier envelopes stay applied.
  std::vector<Ack> ingest_batch(const std::vector<IngestEnvelope>& envelopes);

  // Seals the open segment now and opens the next one.
  SegmentFile rotate_segment(const std::string& session_id);

  /// Final rotation and seal. Idempotent on sealed sessions.
  SessionManifest stop_session(const std::string& session_id);

  /// Graceful shutdown: writes every open segment buffer to
  /// <session>/open_buffer.json, which the next start reloads. Without this
  /// (a crash) the open buffers are lost.
  void flush_open_buffers();

  // Re-attempts attestation of sealed-but-unattested segments; returns how many succeeded.
  std::size_t retry_attestations(const std::string& session_id);

  SessionManifest manifest(const std::string& session_id) const;
  std::vector<std::string> sessions() const;

  // Sealed records plus the open segment buffer.
  std::vector<Record> playback(const std::string& session_id, std::int64_t t0_ms, std::int64_t t1_ms,
                               const std::set<std::string>& kinds) const;
  std::string media(const std::string& session_id, const std::string& path) const;

  /// New subscription; a sealed session yields a queue holding only the
  /// terminal event.
  std::shared_ptr<LiveQueue> subscribe(const std::string& session_id);
  void unsubscribe(const std::string& session_id, const std::shared_ptr<LiveQueue>& queue);

  const SessionStore& store() const { return store_; }

  struct Session;  // per-session state, defined in the implementation

 private:
  std::shared_ptr<Session> find(const std::string& session_id) const;
  std::shared_ptr<Session> load(const SessionManifest& manifest);

  SessionStore& store_;
  Attestor& attestor_;
  IngestOptions options_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

}  // namespace fprig
