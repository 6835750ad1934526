#include "fprig/ingest_types.hpp"

#include "fprig/crypto.hpp"
#include "fprig/error.hpp"

namespace fprig {

std::string_view to_string(StreamKind k) {
  switch (k) {
    case StreamKind::eeg: return "eeg";
    case StreamKind::gsr: return "gsr";
    case StreamKind::image: return "image";
    case StreamKind::audio: return "audio";
    case StreamKind::expression: return "expression";
  }
  return "";
}

StreamKind stream_kind_from_string(std::string_view s) {
  for (auto k : {StreamKind::eeg, StreamKind::gsr, StreamKind::image, StreamKind::audio, StreamKind::expression}) {
    if (to_string(k) == s) return k;
  }
  throw Error(ErrorCode::validation, "stream: unknown stream kind '" + std::string(s) + "'", "stream");
}

Json envelope_to_json(const IngestEnvelope& e) {
  Json payload = std::visit(
      [](const auto& p) -> Json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, EegPayload>) {
          return {{"channels", p.channels}};
        } else if constexpr (std::is_same_v<T, GsrPayload>) {
          return {{"value", p.value}};
        } else if constexpr (std::is_same_v<T, ImagePayload>) {
          Json j{{"data_base64", base64_encode(as_bytes(p.bytes))}};
          if (p.sidecar) j["sidecar"] = image_truth_to_json(*p.sidecar);
          return j;
        } else if constexpr (std::is_same_v<T, AudioPayload>) {
          Json j{{"data_base64", base64_encode(as_bytes(p.bytes))}, {"duration_ms", p.duration_ms}};
          if (p.sidecar) j["sidecar"] = audio_truth_to_json(*p.sidecar);
          return j;
        } else {
          return {{"eye_action", to_string(p.eye_action)},
                  {"upper_face", to_string(p.upper_face)},
                  {"lower_face", to_string(p.lower_face)},
                  {"power", p.power}};
        }
      },
      e.payload);
  return {{"session_id", e.session_id},
          {"stream", to_string(e.stream)},
          {"t_ms", e.t_ms},
          {"seq", e.seq},
          {"payload", std::move(payload)}};
}

namespace {

std::string decode_media(const Json& p) {
  auto b = base64_decode(p.at("data_base64").get<std::string>());
  return {b.begin(), b.end()};
}

}  // namespace

IngestEnvelope envelope_from_json(const Json& v) {
  if (!v.is_object()) throw Error(ErrorCode::validation, "envelope: expected object", "envelope");
  IngestEnvelope e;
  std::string field = "envelope";
  try {
    field = "session_id";
    e.session_id = v.at("session_id").get<std::string>();
    field = "stream";
    e.stream = stream_kind_from_string(v.at("stream").get<std::string>());
    field = "t_ms";
    e.t_ms = v.at("t_ms").get<std::int64_t>();
    field = "seq";
    e.seq = v.at("seq").get<std::int64_t>();
    field = "payload";
    const Json& p = v.at("payload");
    switch (e.stream) {
      case StreamKind::eeg: {
        EegPayload eeg;
        for (const auto& c : p.at("channels")) {
          auto x = c.get<std::int64_t>();
          if (x < INT16_MIN || x > INT16_MAX) throw Error(ErrorCode::validation, "payload.channels: sample out of 16-bit range", "payload.channels");
          eeg.channels.push_back(static_cast<std::int16_t>(x));
        }
        e.payload = std::move(eeg);
        break;
      }
      case StreamKind::gsr:
        e.payload = GsrPayload{p.at("value").get<double>()};
        break;
      case StreamKind::image: {
        ImagePayload img;
        img.bytes = decode_media(p);
        if (p.contains("sidecar")) img.sidecar = image_truth_from_json(p.at("sidecar"));
        e.payload = std::move(img);
        break;
      }
      case StreamKind::audio: {
        AudioPayload aud;
        aud.bytes = decode_media(p);
        aud.duration_ms = p.at("duration_ms").get<std::int64_t>();
        if (p.contains("sidecar")) aud.sidecar = audio_truth_from_json(p.at("sidecar"));
        e.payload = std::move(aud);
        break;
      }
      case StreamKind::expression:
        e.payload = ExpressionPayload{eye_action_from_string(p.value("eye_action", "neutral")),
                                      upper_face_from_string(p.value("upper_face", "neutral")),
                                      lower_face_from_string(p.value("lower_face", "neutral")),
                                      p.value("power", 0.0)};
        break;
    }
  } catch (const Json::exception& ex) {
    throw Error(ErrorCode::validation, field + ": " + ex.what(), field);
  }
  return e;
}

Json ack_to_json(const Ack& ack) {
  return {{"stream", to_string(ack.stream)},
          {"seq", ack.seq},
          {"status", ack.status == AckStatus::accepted ? "accepted" : "duplicate"}};
}

}  // namespace fprig
