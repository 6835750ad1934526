#pragma once

// Wire format shared by the simulator and the ingestion service.
//
//   {"session_id": "...", "stream": "eeg|gsr|image|audio|expression",
//    "t_ms": 0, "seq": 1, "payload": {...}}
//
// payloads:
//   eeg        {"channels": [14 ints]}
//   gsr        {"value": 2.0}
//   image      {"data_base64": "...", "sidecar": ImageTruth}
//   audio      {"data_base64": "...", "duration_ms": 1000, "sidecar": AudioTruth}
//   expression {"eye_action": ..., "upper_face": ..., "lower_face": ..., "power": 0.5}

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fprig/session_model.hpp"
#include "fprig/sidecar.hpp"

namespace fprig {

enum class StreamKind { eeg, gsr, image, audio, expression };
inline constexpr std::size_t kStreamKindCount = 5;

std::string_view to_string(StreamKind k);
StreamKind stream_kind_from_string(std::string_view s);  // Error(validation)

struct EegPayload {
  std::vector<std::int16_t> channels;
  bool operator==(const EegPayload&) const = default;
};
struct GsrPayload {
  double value = 0.0;
  bool operator==(const GsrPayload&) const = default;
};
struct ImagePayload {
  std::string bytes;  // PPM
  std::optional<ImageTruth> sidecar;
  bool operator==(const ImagePayload&) const = default;
};
struct AudioPayload {
  std::string bytes;  // WAV
  std::int64_t duration_ms = 0;
  std::optional<AudioTruth> sidecar;
  bool operator==(const AudioPayload&) const = default;
};
struct ExpressionPayload {
  EyeAction eye_action = EyeAction::neutral;
  UpperFace upper_face = UpperFace::neutral;
  LowerFace lower_face = LowerFace::neutral;
  double power = 0.0;
  bool operator==(const ExpressionPayload&) const = default;
};

using Payload = std::variant<EegPayload, GsrPayload, ImagePayload, AudioPayload, ExpressionPayload>;

struct IngestEnvelope {
  std::string session_id;
  StreamKind stream = StreamKind::gsr;
  std::int64_t t_ms = 0;
  std::int64_t seq = 0;  // strictly increasing per (session, stream)
  Payload payload;
  bool operator==(const IngestEnvelope&) const = default;
};

Json envelope_to_json(const IngestEnvelope& envelope);
IngestEnvelope envelope_from_json(const Json& value);  // Error(validation)

enum class AckStatus { accepted, duplicate };

struct Ack {
  StreamKind stream = StreamKind::gsr;
  std::int64_t seq = 0;
  AckStatus status = AckStatus::accepted;
};

Json ack_to_json(const Ack& ack);

}  // namespace fprig
