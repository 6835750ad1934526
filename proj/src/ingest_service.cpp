#include "fprig/ingest_service.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <spdlog/spdlog.h>

#include "fprig/analysis.hpp"
#include "fprig/des.hpp"
#include "fprig/error.hpp"
#include "fprig/file_util.hpp"
#include "fprig/image.hpp"
#include "fprig/providers.hpp"

namespace fprig {

// ---------------------------------------------------------------------------
// LiveQueue

std::optional<Json> LiveQueue::pop(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  cv_.wait_for(lock, timeout, [&] { return !events_.empty(); });
  if (events_.empty()) return std::nullopt;
  auto ev = std::move(events_.front());
  events_.pop_front();
  return ev;
}

bool LiveQueue::finished() const {
  std::lock_guard lock(mu_);
  return closing_ && events_.empty();
}

void LiveQueue::push(Json event) {
  std::lock_guard lock(mu_);
  if (closing_) return;
  if (events_.size() >= limit_) {
    // Slow consumer: end the subscription so the client resubscribes and
    // reconciles through playback.
    closing_ = true;
    events_.push_back({{"event", "overrun"}});
  } else {
    events_.push_back(std::move(event));
  }
  cv_.notify_all();
}

void LiveQueue::finish(Json event) {
  std::lock_guard lock(mu_);
  if (closing_) return;
  closing_ = true;
  events_.push_back(std::move(event));
  cv_.notify_all();
}

// ---------------------------------------------------------------------------
// Session state

namespace {

constexpr std::int64_t kToneHorizonMs = 24LL * 3600 * 1000;
constexpr const char* kOpenBufferFile = "open_buffer.json";
// Derived records already stamped past the newest sealed segment (transcripts
// from an audio chunk that straddles the boundary). Their source envelope is
// sealed, so a replay after a crash would ack it as a duplicate and never
// regenerate them; they are persisted with every seal instead.
constexpr const char* kCarryFile = "carry.json";

std::size_t stream_index(StreamKind k) { return static_cast<std::size_t>(k); }

std::optional<StreamKind> stream_of(const Record& r) {
  if (std::holds_alternative<EegFrame>(r)) return StreamKind::eeg;
  if (std::holds_alternative<GsrSample>(r)) return StreamKind::gsr;
  if (std::holds_alternative<ExpressionCue>(r)) return StreamKind::expression;
  if (const auto* m = std::get_if<MediaRef>(&r)) return m->kind == MediaKind::image ? StreamKind::image : StreamKind::audio;
  return std::nullopt;
}

std::int64_t sensor_seq(const Record& r) {
  return std::visit(
      [](const auto& x) -> std::int64_t {
        if constexpr (requires { x.seq; }) return x.seq;
        else return 0;
      },
      r);
}

std::int64_t system_epoch_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

bool contains(const std::vector<std::int64_t>& v, std::int64_t x) { return std::find(v.begin(), v.end(), x) != v.end(); }

void erase_value(std::vector<std::int64_t>& v, std::int64_t x) { std::erase(v, x); }

}  // namespace

struct IngestService::Session {
  std::mutex mu;
  SessionManifest manifest;
  AnalyzerSet analyzers;
  KeyPhrases phrases;

  SegmentFile open;
  std::vector<Record> future;  // derived records stamped past the open segment

  std::array<std::int64_t, kStreamKindCount> high_seq{};
  std::array<std::optional<std::int64_t>, kStreamKindCount> high_t{};

  std::deque<EegFrame> eeg_window;
  std::int64_t eeg_total = 0;
  std::deque<GsrSample> gsr_history;
  std::deque<ExpressionCue> cues;
  std::vector<TranscriptRecord> wearer_transcripts;
  std::size_t des_reports_done = 0;

  std::vector<std::int64_t> tones;
  std::int64_t tone_horizon = 0;
  std::size_t tone_index = 0;

  std::optional<std::string> last_response;  // attestation of the newest sealed segment
  std::int64_t feed_seq = 0;
  std::vector<std::shared_ptr<LiveQueue>> subscribers;

  const std::string& id() const { return manifest.session_id; }
  bool sealed() const { return manifest.status == SessionStatus::sealed; }
  std::int64_t rate() const { return manifest.config.eeg_rate_hz; }
  std::int64_t seg_ms() const { return manifest.config.segment_duration_ms; }

  void publish(Json event) {
    for (auto& q : subscribers) q->push(event);
  }

  void publish_record(const Record& r) {
    ++feed_seq;
    if (subscribers.empty()) return;
    publish({{"event", "record"}, {"feed_seq", feed_seq}, {"record", record_to_json(r)}});
  }

  void append(Record r) {
    publish_record(r);
    if (record_time(r) >= open.end_ms) future.push_back(std::move(r));
    else open.records.push_back(std::move(r));
  }

  void ensure_tones(std::int64_t t) {
    if (t < tone_horizon) return;
    while (tone_horizon <= t) tone_horizon = std::max<std::int64_t>(tone_horizon * 2, kToneHorizonMs);
    // The schedule is drawn sequentially, so a longer horizon extends the
    // same prefix.
    tones = schedule_tones(manifest.config, tone_horizon).tone_times_ms;
  }

  // Sensor state only; shared by live ingest and restart rebuild.
  void track(const Record& r) {
    if (auto k = stream_of(r)) {
      auto i = stream_index(*k);
      high_seq[i] = std::max(high_seq[i], sensor_seq(r));
      auto t = record_time(r);
      high_t[i] = high_t[i] ? std::max(*high_t[i], t) : t;
    }
    if (const auto* f = std::get_if<EegFrame>(&r)) {
      eeg_window.push_back(*f);
      ++eeg_total;
      while (static_cast<std::int64_t>(eeg_window.size()) > 2 * rate()) eeg_window.pop_front();
      while (!cues.empty() && cues.front().t_ms < eeg_window.front().t_ms) cues.pop_front();
    } else if (const auto* g = std::get_if<GsrSample>(&r)) {
      gsr_history.push_back(*g);
      while (gsr_history.front().t_ms < g->t_ms - kGsrHistoryMs) gsr_history.pop_front();
    } else if (const auto* c = std::get_if<ExpressionCue>(&r)) {
      cues.push_back(*c);
    }
  }
};

// ---------------------------------------------------------------------------

IngestService::IngestService(SessionStore& store, Attestor& attestor, IngestOptions options)
    : store_(store), attestor_(attestor), options_(std::move(options)) {
  if (!options_.wall_clock_ms) options_.wall_clock_ms = system_epoch_ms;
  for (const auto& id : store_.list_sessions()) {
    try {
      auto m = store_.read_manifest(id);
      if (m.status == SessionStatus::recording) {
        auto s = load(m);
        spdlog::info("resumed session {} at segment {}", id, s->open.segment_index);
      }
    } catch (const std::exception& e) {
      spdlog::error("cannot load session {}: {}", id, e.what());
    }
  }
}

IngestService::~IngestService() {
  std::lock_guard lock(mu_);
  for (auto& [id, s] : sessions_) {
    std::lock_guard slock(s->mu);
    for (auto& q : s->subscribers) q->finish({{"event", "shutdown"}});
  }
}

std::shared_ptr<IngestService::Session> IngestService::load(const SessionManifest& m) {
  auto s = std::make_shared<Session>();
  s->manifest = m;
  s->analyzers = make_analyzers(m.config.providers);
  s->phrases = {m.config.des_start_phrase, m.config.des_end_phrase};

  // A crash between writing a segment and updating the manifest leaves a
  // complete (atomically renamed) file behind; adopt it.
  const auto files = store_.count_segment_files(m.session_id);
  s->manifest.segment_count = std::max(m.segment_count, files);
  s->manifest.record_counts.clear();

  std::size_t sealed_tones = 0;
  std::string last_bytes;
  for (std::int64_t i = 0; i < s->manifest.segment_count; ++i) {
    last_bytes = store_.read_segment_bytes(m.session_id, i);
    auto seg = parse_segment(last_bytes);
    for (const auto& r : seg.records) {
      ++s->manifest.record_counts[std::string(record_kind(r))];
      if (is_sensor_record(r)) {
        s->track(r);
      } else if (const auto* t = std::get_if<TranscriptRecord>(&r)) {
        if (t->speaker == Speaker::wearer) s->wearer_transcripts.push_back(*t);
      } else if (const auto* d = std::get_if<DesReport>(&r)) {
        if (d->terminated) ++s->des_reports_done;
      } else if (std::holds_alternative<DesTone>(r)) {
        ++sealed_tones;
      }
    }
  }
  // Buffer spilled by a graceful shutdown: its records re-enter the open
  // segment and count towards the rebuilt state exactly like sealed ones.
  const auto spill_path = store_.session_dir(m.session_id) / kOpenBufferFile;
  const auto carry_path = store_.session_dir(m.session_id) / kCarryFile;
  std::vector<Record> spilled_open, spilled_future;
  bool spilled = false;
  if (m.status == SessionStatus::recording && std::filesystem::exists(spill_path)) {
    auto j = Json::parse(read_file(spill_path));
    if (j.at("segment_index").get<std::int64_t>() == s->manifest.segment_count) {
      spilled = true;
      for (const auto& r : j.at("records")) spilled_open.push_back(record_from_json(r));
      for (const auto& r : j.at("future")) spilled_future.push_back(record_from_json(r));
    }
    std::filesystem::remove(spill_path);
  }
  // The spill already holds everything the carry file would (and more).
  if (!spilled && m.status == SessionStatus::recording && std::filesystem::exists(carry_path)) {
    auto j = Json::parse(read_file(carry_path));
    if (j.at("segment_index").get<std::int64_t>() == s->manifest.segment_count) {
      for (const auto& r : j.at("records")) spilled_future.push_back(record_from_json(r));
    }
  }
  for (const auto* list : {&spilled_open, &spilled_future}) {
    for (const auto& r : *list) {
      if (is_sensor_record(r)) {
        s->track(r);
      } else if (const auto* t = std::get_if<TranscriptRecord>(&r)) {
        if (t->speaker == Speaker::wearer) s->wearer_transcripts.push_back(*t);
      } else if (const auto* d = std::get_if<DesReport>(&r)) {
        if (d->terminated) ++s->des_reports_done;
      } else if (std::holds_alternative<DesTone>(r)) {
        ++sealed_tones;
      }
    }
  }

  s->tone_index = sealed_tones;
  s->ensure_tones(0);
  while (s->tones.size() < sealed_tones) s->ensure_tones(s->tone_horizon);

  const auto n = s->manifest.segment_count;
  if (!s->sealed()) {
    std::string prev{kGenesisAttestation};
    if (n > 0) {
      const auto last = n - 1;
      if (!contains(s->manifest.unattested_segments, last)) {
        try {
          // Idempotent on the service: recovers the response lost with the crash.
          s->last_response = attestor_.attest(m.session_id, last, hash_segment(last_bytes));
        } catch (const Error& e) {
          spdlog::warn("session {}: attestation of segment {} failed on resume: {}", m.session_id, last, e.what());
          s->manifest.unattested_segments.push_back(last);
        }
      }
      prev = s->last_response ? *s->last_response : std::string(kPendingAttestation);
      if (!s->last_response && !contains(s->manifest.chain_gaps, last)) s->manifest.chain_gaps.push_back(last);
    }
    s->open.session_id = m.session_id;
    s->open.segment_index = n;
    s->open.prev_attestation = prev;
    s->open.start_ms = n * s->seg_ms();
    s->open.end_ms = s->open.start_ms + s->seg_ms();
    s->open.records = std::move(spilled_open);
    s->future = std::move(spilled_future);
    // carried records stamped inside the reopened segment belong to it
    auto keep = std::stable_partition(s->future.begin(), s->future.end(),
                                      [&](const Record& r) { return record_time(r) >= s->open.end_ms; });
    std::move(keep, s->future.end(), std::back_inserter(s->open.records));
    s->future.erase(keep, s->future.end());
    store_.write_manifest(s->manifest);
  }
  sessions_[m.session_id] = s;
  return s;
}

std::shared_ptr<IngestService::Session> IngestService::find(const std::string& session_id) const {
  std::lock_guard lock(mu_);
  if (auto it = sessions_.find(session_id); it != sessions_.end()) return it->second;
  if (!store_.exists(session_id)) {
    throw Error(ErrorCode::not_found, "unknown session '" + session_id + "'", "session_id");
  }
  // Sealed sessions are loaded lazily (duplicate acks need their high-water marks).
  auto m = store_.read_manifest(session_id);
  return const_cast<IngestService*>(this)->load(m);
}

SessionManifest IngestService::start_session(const SessionConfig& config) {
  auto v = validate_config(config);
  if (!v.empty()) throw Error(ErrorCode::validation, v.front().field + ": " + v.front().rule, v.front().field);

  std::lock_guard lock(mu_);
  if (sessions_.contains(config.session_id) || store_.exists(config.session_id)) {
    throw Error(ErrorCode::conflict, "session '" + config.session_id + "' already exists", "session_id");
  }
  auto s = std::make_shared<Session>();
  s->analyzers = make_analyzers(config.providers);  // before touching disk: provider config errors abort cleanly
  s->manifest.session_id = config.session_id;
  s->manifest.start_epoch_ms = options_.wall_clock_ms();
  s->manifest.config = config;
  s->phrases = {config.des_start_phrase, config.des_end_phrase};
  s->open.session_id = config.session_id;
  s->open.segment_index = 0;
  s->open.prev_attestation = std::string(kGenesisAttestation);
  s->open.start_ms = 0;
  s->open.end_ms = config.segment_duration_ms;
  s->ensure_tones(0);

  store_.create(config.session_id);
  store_.write_manifest(s->manifest);
  sessions_[config.session_id] = s;
  return s->manifest;
}

// ---------------------------------------------------------------------------
// Sealing

namespace {

std::optional<std::string> try_attest(Attestor& attestor, const std::string& sid, std::int64_t index,
                                      const std::string& digest) {
  try {
    return attestor.attest(sid, index, digest);
  } catch (const Error& e) {
    spdlog::warn("session {}: attestation of segment {} failed: {}", sid, index, e.what());
    return std::nullopt;
  }
}

void retry_unattested(IngestService::Session& s, SessionStore& store, Attestor& attestor, std::size_t* done) {
  auto pending = s.manifest.unattested_segments;
  for (auto idx : pending) {
    auto digest = hash_segment(store.read_segment_bytes(s.id(), idx));
    auto resp = try_attest(attestor, s.id(), idx, digest);
    if (!resp) continue;
    erase_value(s.manifest.unattested_segments, idx);
    if (done) ++*done;
    if (idx + 1 == s.manifest.segment_count) {
      s.last_response = resp;
      if (s.sealed()) {
        // The final link lives in the manifest and can still be filled in.
        s.manifest.final_attestation = *resp;
        erase_value(s.manifest.chain_gaps, idx);
      }
    }
  }
}

void write_carry(IngestService::Session& s, SessionStore& store) {
  const auto path = store.session_dir(s.id()) / kCarryFile;
  if (s.future.empty()) {
    std::filesystem::remove(path);
    return;
  }
  Json records = Json::array();
  for (const auto& r : s.future) records.push_back(record_to_json(r));
  write_file_atomic(path, canonical_dump({{"segment_index", s.open.segment_index + 1}, {"records", records}}));
}

void seal_open(IngestService::Session& s, SessionStore& store, Attestor& attestor) {
  auto& seg = s.open;
  sort_timeline(seg.records);
  auto bytes = serialize_segment(seg);
  // Before the segment: a carry file is only trusted once its predecessor exists.
  write_carry(s, store);
  store.write_segment_bytes(s.id(), seg.segment_index, bytes);
  s.manifest.segment_count = seg.segment_index + 1;
  for (const auto& r : seg.records) ++s.manifest.record_counts[std::string(record_kind(r))];

  s.last_response = try_attest(attestor, s.id(), seg.segment_index, hash_segment(bytes));
  if (!s.last_response) s.manifest.unattested_segments.push_back(seg.segment_index);
  store.write_manifest(s.manifest);

  ++s.feed_seq;
  s.publish({{"event", "segment_sealed"},
             {"feed_seq", s.feed_seq},
             {"segment_index", seg.segment_index},
             {"attested", s.last_response.has_value()}});
}

void open_next(IngestService::Session& s) {
  const auto prev_index = s.open.segment_index;
  SegmentFile next;
  next.session_id = s.id();
  next.segment_index = prev_index + 1;
  next.prev_attestation = s.last_response ? *s.last_response : std::string(kPendingAttestation);
  if (!s.last_response) s.manifest.chain_gaps.push_back(prev_index);
  next.start_ms = s.open.end_ms;
  next.end_ms = next.start_ms + s.seg_ms();
  auto keep = std::stable_partition(s.future.begin(), s.future.end(),
                                    [&](const Record& r) { return record_time(r) >= next.end_ms; });
  std::move(keep, s.future.end(), std::back_inserter(next.records));
  s.future.erase(keep, s.future.end());
  s.open = std::move(next);
}

void emit_tones(IngestService::Session& s, std::int64_t upto) {
  s.ensure_tones(upto);
  while (s.tone_index < s.tones.size() && s.tones[s.tone_index] <= upto && s.tones[s.tone_index] < s.open.end_ms) {
    const auto t = s.tones[s.tone_index++];
    ++s.feed_seq;
    s.publish({{"event", "tone"}, {"feed_seq", s.feed_seq}, {"t_ms", t}});
    s.append(DesTone{t});
  }
}

// Moves session time forward to `t`, sealing every segment that ends at or
// before it and emitting the DES prompts due on the way.
void advance_time(IngestService::Session& s, SessionStore& store, Attestor& attestor, std::int64_t t) {
  for (;;) {
    emit_tones(s, t);
    if (t < s.open.end_ms) return;
    seal_open(s, store, attestor);
    open_next(s);
  }
}

}  // namespace

void IngestService::flush_open_buffers() {
  std::lock_guard lock(mu_);
  for (auto& [id, s] : sessions_) {
    std::lock_guard slock(s->mu);
    if (s->sealed()) continue;
    Json records = Json::array();
    Json future = Json::array();
    for (const auto& r : s->open.records) records.push_back(record_to_json(r));
    for (const auto& r : s->future) future.push_back(record_to_json(r));
    Json spill{{"segment_index", s->open.segment_index}, {"records", records}, {"future", future}};
    write_file_atomic(store_.session_dir(id) / kOpenBufferFile, canonical_dump(spill));
  }
}

SegmentFile IngestService::rotate_segment(const std::string& session_id) {
  auto s = find(session_id);
  std::lock_guard lock(s->mu);
  if (s->sealed()) throw Error(ErrorCode::conflict, "session '" + session_id + "' is sealed", "session_id");
  emit_tones(*s, s->open.end_ms - 1);
  seal_open(*s, store_, attestor_);
  SegmentFile sealed = s->open;
  open_next(*s);
  retry_unattested(*s, store_, attestor_, nullptr);
  return sealed;
}

SessionManifest IngestService::stop_session(const std::string& session_id) {
  auto s = find(session_id);
  std::lock_guard lock(s->mu);
  if (s->sealed()) return s->manifest;

  // A report still open at session end is kept, marked unterminated.
  auto reports = extract_reports(s->wearer_transcripts, s->phrases);
  for (auto i = s->des_reports_done; i < reports.size(); ++i) s->append(reports[i]);
  s->des_reports_done = reports.size();

  seal_open(*s, store_, attestor_);
  while (!s->future.empty()) {
    open_next(*s);
    seal_open(*s, store_, attestor_);
  }
  const auto last = s->open.segment_index;
  s->manifest.status = SessionStatus::sealed;
  s->manifest.final_attestation = s->last_response ? *s->last_response : std::string(kPendingAttestation);
  if (!s->last_response) s->manifest.chain_gaps.push_back(last);
  retry_unattested(*s, store_, attestor_, nullptr);
  store_.write_manifest(s->manifest);

  ++s->feed_seq;
  for (auto& q : s->subscribers) {
    q->finish({{"event", "sealed"}, {"feed_seq", s->feed_seq}, {"manifest", manifest_to_json(s->manifest)}});
  }
  s->subscribers.clear();
  return s->manifest;
}

std::size_t IngestService::retry_attestations(const std::string& session_id) {
  auto s = find(session_id);
  std::lock_guard lock(s->mu);
  std::size_t done = 0;
  retry_unattested(*s, store_, attestor_, &done);
  store_.write_manifest(s->manifest);
  return done;
}

// ---------------------------------------------------------------------------
// Ingest

namespace {

void check_payload(const IngestEnvelope& e, const SessionConfig& config) {
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, EegPayload>) {
          if (p.channels.size() != kEegChannels) {
            throw Error(ErrorCode::validation, "payload.channels: expected 14", "payload.channels");
          }
        } else if constexpr (std::is_same_v<T, GsrPayload>) {
          if (!(p.value >= 0.0) || !std::isfinite(p.value)) {
            throw Error(ErrorCode::validation, "payload.value: must be finite and >= 0", "payload.value");
          }
        } else if constexpr (std::is_same_v<T, ImagePayload>) {
          decode_ppm(p.bytes);  // Error(format)
        } else if constexpr (std::is_same_v<T, AudioPayload>) {
          if (p.bytes.size() < 44 || p.bytes.compare(0, 4, "RIFF") != 0 || p.bytes.compare(8, 4, "WAVE") != 0) {
            throw Error(ErrorCode::format, "payload.data_base64: not a RIFF/WAVE file", "payload.data_base64");
          }
          if (p.duration_ms < 0) throw Error(ErrorCode::validation, "payload.duration_ms: must be >= 0", "payload.duration_ms");
        } else {
          if (!(p.power >= 0.0 && p.power <= 1.0)) {
            throw Error(ErrorCode::validation, "payload.power: must be in [0,1]", "payload.power");
          }
        }
      },
      e.payload);
  (void)config;
}

template <typename F>
void guarded(const std::string& sid, const char* analyzer, std::int64_t t, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    // Derived-stream gap; ingestion continues.
    spdlog::warn("session {}: {} analyzer failed at t={}: {}", sid, analyzer, t, e.what());
  }
}

void run_eeg_analyzers(IngestService::Session& s) {
  const auto window = 2 * s.rate();
  if (static_cast<std::int64_t>(s.eeg_window.size()) != window || (s.eeg_total - window) % s.rate() != 0) return;
  std::vector<EegFrame> frames(s.eeg_window.begin(), s.eeg_window.end());
  auto bp = band_power(frames, s.rate());
  s.append(bp);
  double g = 0.5;
  if (!s.gsr_history.empty()) {
    std::vector<GsrSample> hist(s.gsr_history.begin(), s.gsr_history.end());
    g = normalize_gsr(hist, hist.back());
  }
  guarded(s.id(), "cognition", bp.t_ms, [&] {
    auto c = s.analyzers.cognition->cognition(bp, g);
    c.t_ms = bp.t_ms;
    s.append(c);
  });
  guarded(s.id(), "expression", bp.t_ms, [&] {
    std::vector<ExpressionCue> cues(s.cues.begin(), s.cues.end());
    s.append(s.analyzers.expression->expression(frames, cues));
  });
}

}  // namespace

Ack IngestService::ingest(const IngestEnvelope& e) {
  auto s = find(e.session_id);
  std::lock_guard lock(s->mu);
  const auto k = stream_index(e.stream);
  Ack ack{e.stream, e.seq, AckStatus::accepted};
  if (e.seq <= s->high_seq[k] && e.seq >= 1) {
    ack.status = AckStatus::duplicate;
    return ack;
  }
  if (s->sealed()) throw Error(ErrorCode::conflict, "session '" + e.session_id + "' is sealed", "session_id");
  if (e.seq < 1) throw Error(ErrorCode::validation, "seq: must be >= 1", "seq");
  if (e.t_ms < 0) throw Error(ErrorCode::validation, "t_ms: must be >= 0", "t_ms");
  if (s->high_t[k] && e.t_ms < *s->high_t[k]) {
    throw Error(ErrorCode::ordering,
                "t_ms: " + std::to_string(e.t_ms) + " precedes " + std::to_string(*s->high_t[k]) + " on stream " +
                    std::string(to_string(e.stream)),
                "t_ms");
  }
  check_payload(e, s->manifest.config);

  advance_time(*s, store_, attestor_, e.t_ms);
  const auto& sid = s->id();
  const auto t = e.t_ms;

  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, EegPayload>) {
          EegFrame f{t, p.channels, e.seq};
          s->track(f);
          s->append(std::move(f));
          run_eeg_analyzers(*s);
        } else if constexpr (std::is_same_v<T, GsrPayload>) {
          GsrSample g{t, p.value, e.seq};
          s->track(g);
          s->append(g);
        } else if constexpr (std::is_same_v<T, ExpressionPayload>) {
          ExpressionCue c{t, p.eye_action, p.upper_face, p.lower_face, p.power, e.seq};
          s->track(c);
          s->append(c);
        } else if constexpr (std::is_same_v<T, ImagePayload>) {
          const ImageTruth* truth = p.sidecar ? &*p.sidecar : nullptr;
          auto decoded = decode_ppm(p.bytes);
          std::vector<Box> boxes;
          bool faces_ok = true;
          try {
            boxes = detect_faces(p.bytes, *s->analyzers.faces, t, truth);
          } catch (const Error& err) {
            // Without face locations the whole frame is treated as a face.
            spdlog::warn("session {}: face detection failed at t={}: {}; blurring whole frame", sid, t, err.what());
            boxes = {Box{0, 0, decoded.image.width, decoded.image.height}};
            faces_ok = false;
          }
          auto stored = s->manifest.config.blur_enabled ? blur_faces(p.bytes, boxes) : p.bytes;
          auto name = SessionStore::image_media_name(t);
          store_.write_media(sid, name, stored);  // media first: no dangling refs
          MediaRef ref{t, MediaKind::image, name, sha256_hex(stored), std::nullopt, e.seq};
          s->track(ref);
          s->append(ref);
          guarded(sid, "labels", t, [&] {
            // Analyzers only ever see the privacy-filtered frame.
            auto a = annotate_image(stored, *s->analyzers.labels, t, truth);
            a.face_boxes = faces_ok ? boxes : std::vector<Box>{};
            s->append(std::move(a));
          });
        } else if constexpr (std::is_same_v<T, AudioPayload>) {
          auto name = SessionStore::audio_media_name(t);
          store_.write_media(sid, name, p.bytes);
          MediaRef ref{t, MediaKind::audio, name, sha256_hex(p.bytes), p.duration_ms, e.seq};
          s->track(ref);
          s->append(ref);
          const AudioTruth* truth = p.sidecar ? &*p.sidecar : nullptr;
          std::vector<TranscriptRecord> lines;
          guarded(sid, "transcription", t, [&] { lines = transcribe(p.bytes, *s->analyzers.transcription, t, truth); });
          bool wearer_spoke = false;
          for (auto& line : lines) {
            s->append(line);
            if (line.speaker != Speaker::wearer) continue;
            wearer_spoke = true;
            s->wearer_transcripts.push_back(line);
            guarded(sid, "sentiment", line.t_start_ms,
                    [&] { s->append(s->analyzers.sentiment->analyze_sentiment(line.text, line.t_start_ms)); });
          }
          if (wearer_spoke) {
            auto reports = extract_reports(s->wearer_transcripts, s->phrases);
            while (s->des_reports_done < reports.size() && reports[s->des_reports_done].terminated) {
              s->append(reports[s->des_reports_done++]);
            }
          }
        }
      },
      e.payload);
  return ack;
}

std::vector<Ack> IngestService::ingest_batch(const std::vector<IngestEnvelope>& envelopes) {
  std::vector<Ack> acks;
  acks.reserve(envelopes.size());
  for (const auto& e : envelopes) acks.push_back(ingest(e));
  return acks;
}

// ---------------------------------------------------------------------------
// Queries

SessionManifest IngestService::manifest(const std::string& session_id) const {
  auto s = find(session_id);
  std::lock_guard lock(s->mu);
  return s->manifest;
}

std::vector<std::string> IngestService::sessions() const { return store_.list_sessions(); }

std::vector<Record> IngestService::playback(const std::string& session_id, std::int64_t t0_ms, std::int64_t t1_ms,
                                            const std::set<std::string>& kinds) const {
  if (t0_ms > t1_ms) throw Error(ErrorCode::validation, "t0 must be <= t1", "t0");
  auto s = find(session_id);
  std::lock_guard lock(s->mu);
  auto out = timeline_query(store_, session_id, t0_ms, t1_ms, kinds);
  if (!s->sealed()) {
    auto take = [&](const std::vector<Record>& rs) {
      for (const auto& r : rs) {
        auto t = record_time(r);
        if (t >= t0_ms && t < t1_ms && kinds.contains(std::string(record_kind(r)))) out.push_back(r);
      }
    };
    take(s->open.records);
    take(s->future);
    sort_timeline(out);
  }
  return out;
}

std::string IngestService::media(const std::string& session_id, const std::string& path) const {
  if (!store_.exists(session_id)) throw Error(ErrorCode::not_found, "unknown session '" + session_id + "'", "session_id");
  return store_.read_media(session_id, path);
}

std::shared_ptr<LiveQueue> IngestService::subscribe(const std::string& session_id) {
  auto s = find(session_id);
  auto q = std::make_shared<LiveQueue>(options_.live_queue_limit);
  std::lock_guard lock(s->mu);
  if (s->sealed()) {
    q->finish({{"event", "sealed"}, {"feed_seq", s->feed_seq}, {"manifest", manifest_to_json(s->manifest)}});
  } else {
    s->subscribers.push_back(q);
  }
  return q;
}

void IngestService::unsubscribe(const std::string& session_id, const std::shared_ptr<LiveQueue>& queue) {
  std::shared_ptr<Session> s;
  try {
    s = find(session_id);
  } catch (const Error&) {
    return;
  }
  std::lock_guard lock(s->mu);
  std::erase(s->subscribers, queue);
}

}  // namespace fprig
