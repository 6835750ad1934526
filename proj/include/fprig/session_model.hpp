#pragma once

// Domain types for recorded sessions and the canonical JSON segment format.
//
// Timestamps are session-relative milliseconds. The manifest carries the one
// wall-clock anchor (start_epoch_ms).

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "fprig/crypto.hpp"

namespace fprig {

using Json = nlohmann::json;

inline constexpr std::size_t kEegChannels = 14;
inline constexpr std::size_t kBandCount = 5;
inline constexpr std::string_view kSchemaVersion = "1.0";
inline constexpr std::string_view kGenesisAttestation =
    "0000000000000000000000000000000000000000000000000000000000000000";
// Written as prev_attestation when the previous segment could not be attested.
inline constexpr std::string_view kPendingAttestation = "PENDING";

struct Violation {
  std::string field;
  std::string rule;
  bool operator==(const Violation&) const = default;
};

// ---------------------------------------------------------------------------
// Configuration

enum class ProviderKind { reference, sidecar, remote };

struct ProviderSelection {
  ProviderKind kind = ProviderKind::reference;
  std::string endpoint;      // remote only
  std::string sidecar_path;  // sidecar only
  bool operator==(const ProviderSelection&) const = default;
};

struct ProviderConfig {
  ProviderSelection faces;
  ProviderSelection labels;
  ProviderSelection transcription;
  ProviderSelection sentiment;
  ProviderSelection cognition;
  ProviderSelection expression;
  bool operator==(const ProviderConfig&) const = default;
};

struct SessionConfig {
  std::string session_id;
  std::int64_t image_period_ms = 1000;
  std::int64_t gsr_period_ms = 1000;
  std::int64_t eeg_rate_hz = 128;
  std::int64_t segment_duration_ms = 60000;
  std::int64_t des_interval_min_s = 900;
  std::int64_t des_interval_max_s = 3600;
  bool blur_enabled = true;
  ProviderConfig providers;
  std::uint64_t rng_seed = 0;
  std::string des_start_phrase = "start ziggy";
  std::string des_end_phrase = "end ziggy";
  bool operator==(const SessionConfig&) const = default;
};

std::vector<Violation> validate_config(const SessionConfig& config);

enum class SessionStatus { recording, sealed };

struct SessionManifest {
  std::string session_id;
  std::int64_t start_epoch_ms = 0;
  SessionConfig config;
  std::int64_t segment_count = 0;
  std::string genesis_attestation{kGenesisAttestation};
  SessionStatus status = SessionStatus::recording;
  // Indices i whose successor link (segment i+1 prev_attestation, or the
  // final attestation for the last segment) is the PENDING sentinel.
  std::vector<std::int64_t> chain_gaps;
  // Sealed segments whose attestation has not been obtained yet.
  std::vector<std::int64_t> unattested_segments;
  std::optional<std::string> final_attestation;
  std::map<std::string, std::int64_t> record_counts;  // sealed records by kind
  bool operator==(const SessionManifest&) const = default;
};

// ---------------------------------------------------------------------------
// Records. Sensor records carry the client sequence number of the envelope
// they arrived in; derived records do not.

struct EegFrame {
  std::int64_t t_ms = 0;
  std::vector<std::int16_t> channels;  // 14 raw samples, arbitrary units
  std::int64_t seq = 0;
  bool operator==(const EegFrame&) const = default;
};

struct GsrSample {
  std::int64_t t_ms = 0;
  double value = 0.0;  // microsiemens
  std::int64_t seq = 0;
  bool operator==(const GsrSample&) const = default;
};

enum class MediaKind { image, audio };

struct MediaRef {
  std::int64_t t_ms = 0;
  MediaKind kind = MediaKind::image;
  std::string path;    // relative to the session directory
  std::string digest;  // SHA-256 of the stored file bytes
  std::optional<std::int64_t> duration_ms;  // audio only
  std::int64_t seq = 0;
  bool operator==(const MediaRef&) const = default;
};

enum class EyeAction { neutral, blink, wink_left, wink_right };
enum class UpperFace { neutral, raise_brow, furrow_brow };
enum class LowerFace { neutral, smile, clench, frown };

// Scripted facial-expression input; stands in for the headset's
// expression detection signal.
struct ExpressionCue {
  std::int64_t t_ms = 0;
  EyeAction eye_action = EyeAction::neutral;
  UpperFace upper_face = UpperFace::neutral;
  LowerFace lower_face = LowerFace::neutral;
  double power = 0.0;
  std::int64_t seq = 0;
  bool operator==(const ExpressionCue&) const = default;
};

using BandArray = std::array<double, kBandCount>;  // theta, alpha, betaL, betaH, gamma

struct BandPowerRecord {
  std::int64_t t_ms = 0;
  std::vector<BandArray> per_channel;
  BandArray avg{};
  bool operator==(const BandPowerRecord&) const = default;
};

struct CognitionRecord {
  std::int64_t t_ms = 0;
  double engagement = 0.0;
  double excitement = 0.0;
  double stress = 0.0;
  double relaxation = 0.0;
  double interest = 0.0;
  double focus = 0.0;
  bool operator==(const CognitionRecord&) const = default;
};

struct FacialExpressionRecord {
  std::int64_t t_ms = 0;
  EyeAction eye_action = EyeAction::neutral;
  UpperFace upper_face = UpperFace::neutral;
  LowerFace lower_face = LowerFace::neutral;
  double power = 0.0;
  bool operator==(const FacialExpressionRecord&) const = default;
};

enum class Speaker { wearer, other };

struct TranscriptRecord {
  std::int64_t t_start_ms = 0;
  std::int64_t t_end_ms = 0;
  Speaker speaker = Speaker::wearer;
  std::string text;
  bool operator==(const TranscriptRecord&) const = default;
};

enum class SentimentLabel { positive, negative, mixed, neutral };

struct SentimentRecord {
  std::int64_t t_ms = 0;
  SentimentLabel label = SentimentLabel::neutral;
  std::array<double, 4> scores{0.0, 0.0, 0.0, 1.0};  // label order
  bool operator==(const SentimentRecord&) const = default;
};

struct DesReport {
  std::int64_t t_start_ms = 0;
  std::int64_t t_end_ms = 0;
  std::string text;
  bool terminated = true;
  bool operator==(const DesReport&) const = default;
};

// A DES prompt emitted to the wearer.
struct DesTone {
  std::int64_t t_ms = 0;
  bool operator==(const DesTone&) const = default;
};

struct Box {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
  bool operator==(const Box&) const = default;
};

struct LabelScore {
  std::string label;
  double confidence = 0.0;
  bool operator==(const LabelScore&) const = default;
};

struct ImageAnnotation {
  std::int64_t t_ms = 0;
  int image_width = 0;
  int image_height = 0;
  std::vector<LabelScore> labels;
  std::vector<std::string> texts;
  std::vector<Box> face_boxes;
  bool operator==(const ImageAnnotation&) const = default;
};

using Record = std::variant<EegFrame, GsrSample, MediaRef, ExpressionCue, BandPowerRecord,
                            CognitionRecord, FacialExpressionRecord, TranscriptRecord,
                            SentimentRecord, DesReport, DesTone, ImageAnnotation>;

std::int64_t record_time(const Record& record);
// Kind name used in JSON ("type") and in timeline queries.
std::string_view record_kind(const Record& record);
bool is_sensor_record(const Record& record);

// Every kind name accepted by timeline queries.
const std::vector<std::string>& all_record_kinds();
// Parses a comma-separated kinds list; "des" is an alias for des_report and
// "all" (or an empty string) selects every kind. Throws Error(validation).
std::set<std::string> parse_kinds(std::string_view csv);

struct SegmentFile {
  std::string schema_version{kSchemaVersion};
  std::string session_id;
  std::int64_t segment_index = 0;
  std::string prev_attestation{kGenesisAttestation};
  std::int64_t start_ms = 0;
  std::int64_t end_ms = 0;
  std::vector<Record> records;
  bool operator==(const SegmentFile&) const = default;
};

std::vector<Violation> validate_segment(const SegmentFile& segment);

/// Canonical bytes: sorted keys, no insignificant whitespace, shortest
/// round-trip numbers. Throws Error(validation) naming the first offending
/// field when the segment violates its invariants.
std::string serialize_segment(const SegmentFile& segment);

/// Strict inverse of serialize_segment. Unknown fields are rejected.
/// Malformed JSON raises Error(parse) carrying the byte offset in the message;
/// schema violations raise Error(validation) with the field path.
SegmentFile parse_segment(std::string_view bytes);

std::string canonical_dump(const Json& value);

// JSON conversions shared with the manifest, wire and export formats.
Json record_to_json(const Record& record);
Record record_from_json(const Json& value, const std::string& path = "record");
Json config_to_json(const SessionConfig& config);
SessionConfig config_from_json(const Json& value);
Json manifest_to_json(const SessionManifest& manifest);
SessionManifest manifest_from_json(const Json& value);

std::string_view to_string(SessionStatus s);
std::string_view to_string(ProviderKind k);
std::string_view to_string(MediaKind k);
std::string_view to_string(EyeAction v);
std::string_view to_string(UpperFace v);
std::string_view to_string(LowerFace v);
std::string_view to_string(Speaker v);
std::string_view to_string(SentimentLabel v);

EyeAction eye_action_from_string(std::string_view s);
UpperFace upper_face_from_string(std::string_view s);
LowerFace lower_face_from_string(std::string_view s);
Speaker speaker_from_string(std::string_view s);

}  // namespace fprig
