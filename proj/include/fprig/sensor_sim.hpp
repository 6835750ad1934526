#pragma once

// Deterministic multi-rate sensor simulator standing in for the wearable rig.
// Every generator is a pure function of (scenario, window).

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fprig/ingest_types.hpp"
#include "fprig/session_model.hpp"
#include "fprig/sidecar.hpp"

namespace fprig {

inline constexpr int kImageWidth = 320;
inline constexpr int kImageHeight = 240;
inline constexpr int kAudioRateHz = 16000;
inline constexpr double kGsrDecayMs = 10000.0;

struct EegTone {
  std::vector<int> channels;  // empty = all 14
  double frequency_hz = 10.0;
  double amplitude = 1000.0;
  std::int64_t t_start_ms = 0;
  std::int64_t t_end_ms = 0;
};

struct GsrEvent {
  std::int64_t t_ms = 0;
  double delta = 0.0;
};

struct SpeechScriptLine {
  std::int64_t t_start_ms = 0;
  std::int64_t duration_ms = 0;  // 0 = 400 ms per word, at least 500 ms
  Speaker speaker = Speaker::wearer;
  std::string text;
};

// The scene holds from t_ms until the next entry.
struct ImageScriptEntry {
  std::int64_t t_ms = 0;
  std::string scene;
  std::vector<Box> face_boxes;
  std::vector<std::string> texts;
  std::vector<std::string> labels;
};

struct ExpressionEvent {
  std::int64_t t_ms = 0;
  ExpressionPayload expression;
};

struct Scenario {
  SessionConfig config;  // stream rates and the session to create
  std::int64_t duration_ms = 60000;
  std::vector<EegTone> eeg_tones;
  double noise_amplitude = 0.0;
  double gsr_baseline = 2.0;
  std::vector<GsrEvent> gsr_events;
  std::vector<SpeechScriptLine> speech_script;
  std::vector<ImageScriptEntry> image_script;
  std::vector<ExpressionEvent> expression_events;
  std::int64_t audio_chunk_ms = 5000;
  std::uint64_t rng_seed = 0;
};

std::vector<Violation> validate_scenario(const Scenario& scenario);
// Throws Error(configuration) with the first violation.
void check_scenario(const Scenario& scenario);

Scenario scenario_from_json(const Json& value);
Json scenario_to_json(const Scenario& scenario);

// Frame i is stamped floor(i * 1000 / rate) ms.
std::int64_t eeg_frame_time(std::int64_t index, std::int64_t rate_hz);
std::int64_t first_eeg_frame_at_or_after(std::int64_t t_ms, std::int64_t rate_hz);

/// channel value = round(sum of active tones A sin(2 pi f t) + noise * u(i, c)),
/// clamped to int16, with u a seeded uniform in [-1, 1] keyed by frame index
/// and channel.
std::vector<EegFrame> gen_eeg(const Scenario& scenario, std::int64_t t0_ms, std::int64_t t1_ms);

/// baseline + sum over past events of delta * exp(-(t - t_event) / 10 s),
/// clamped at 0; one sample per gsr_period_ms.
std::vector<GsrSample> gen_gsr(const Scenario& scenario, std::int64_t t0_ms, std::int64_t t1_ms);
double gsr_value_at(const Scenario& scenario, std::int64_t t_ms);

struct GeneratedImage {
  std::string bytes;  // 320x240 P6
  ImageTruth truth;
};
GeneratedImage gen_image(const Scenario& scenario, std::int64_t t_ms);

struct GeneratedAudio {
  std::string bytes;  // mono 16 kHz 16-bit PCM WAV
  AudioTruth truth;
  std::int64_t duration_ms = 0;
};
GeneratedAudio gen_audio(const Scenario& scenario, std::int64_t t0_ms, std::int64_t t1_ms);

std::string encode_wav(std::span<const std::int16_t> samples, int rate_hz);

/// All envelopes with t in [t0, t1), ordered by time with ties broken
/// gsr < expression < image < audio < eeg. Sequence numbers are 1-based
/// positions in each stream, so any window is reproducible on its own.
std::vector<IngestEnvelope> build_envelopes(const Scenario& scenario, std::int64_t t0_ms, std::int64_t t1_ms);

struct TransmissionSummary {
  std::string session_id;
  std::map<std::string, std::int64_t> sent;        // by stream
  std::map<std::string, std::int64_t> acked;       // accepted acks by stream
  std::map<std::string, std::int64_t> duplicates;  // duplicate acks by stream
  std::int64_t tones_received = 0;
  SessionManifest final_manifest;
};

Json summary_to_json(const TransmissionSummary& summary);

/// Creates the session on the ingestion service at `endpoint`, streams every
/// envelope in timestamp order, listens on the live feed for DES tone
/// prompts, and stops the session. Unreachable endpoint -> Error(transport);
/// a rejected envelope aborts with the server's diagnostic.
TransmissionSummary run_scenario(const Scenario& scenario, std::string_view endpoint, bool listen_for_tones = true);

}  // namespace fprig
