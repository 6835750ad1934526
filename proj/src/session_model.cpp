#include "fprig/session_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fprig/error.hpp"

namespace fprig {

namespace {

[[noreturn]] void schema_error(const std::string& field, const std::string& rule) {
  throw Error(ErrorCode::validation, field + ": " + rule, field);
}

// Reads a JSON object strictly: every key must be consumed, unknown keys and
// wrong types are schema errors naming the field path.
class ObjectReader {
 public:
  ObjectReader(const Json& value, std::string path) : value_(value), path_(std::move(path)) {
    if (!value_.is_object()) schema_error(path_, "expected object");
  }

  std::string field(std::string_view key) const { return path_ + "." + std::string(key); }

  const Json* find(std::string_view key) {
    auto it = value_.find(key);
    if (it == value_.end()) return nullptr;
    used_.insert(std::string(key));
    return &*it;
  }

  const Json& require(std::string_view key) {
    const Json* v = find(key);
    if (v == nullptr) schema_error(field(key), "missing required field");
    return *v;
  }

  std::int64_t int64(std::string_view key) { return as_int64(require(key), field(key)); }
  double number(std::string_view key) { return as_number(require(key), field(key)); }
  std::string string(std::string_view key) { return as_string(require(key), field(key)); }
  bool boolean(std::string_view key) {
    const Json& v = require(key);
    if (!v.is_boolean()) schema_error(field(key), "expected boolean");
    return v.get<bool>();
  }

  void finish() const {
    for (auto it = value_.begin(); it != value_.end(); ++it) {
      if (!used_.contains(it.key())) schema_error(field(it.key()), "unknown field");
    }
  }

  static std::int64_t as_int64(const Json& v, const std::string& field) {
    if (v.is_number_integer()) return v.get<std::int64_t>();
    schema_error(field, "expected integer");
  }
  static double as_number(const Json& v, const std::string& field) {
    if (v.is_number()) return v.get<double>();
    schema_error(field, "expected number");
  }
  static std::string as_string(const Json& v, const std::string& field) {
    if (v.is_string()) return v.get<std::string>();
    schema_error(field, "expected string");
  }

 private:
  const Json& value_;
  std::string path_;
  std::set<std::string> used_;
};

const Json& require_array(const Json& v, const std::string& field) {
  if (!v.is_array()) schema_error(field, "expected array");
  return v;
}

template <typename Enum, std::size_t N>
Enum enum_from(std::string_view s, const std::array<Enum, N>& values, const std::string& field) {
  for (Enum e : values) {
    if (to_string(e) == s) return e;
  }
  schema_error(field, "unknown value '" + std::string(s) + "'");
}

constexpr std::array kEyeActions{EyeAction::neutral, EyeAction::blink, EyeAction::wink_left,
                                 EyeAction::wink_right};
constexpr std::array kUpperFaces{UpperFace::neutral, UpperFace::raise_brow,
                                 UpperFace::furrow_brow};
constexpr std::array kLowerFaces{LowerFace::neutral, LowerFace::smile, LowerFace::clench,
                                 LowerFace::frown};
constexpr std::array kSpeakers{Speaker::wearer, Speaker::other};
constexpr std::array kSentiments{SentimentLabel::positive, SentimentLabel::negative,
                                 SentimentLabel::mixed, SentimentLabel::neutral};
constexpr std::array kProviderKinds{ProviderKind::reference, ProviderKind::sidecar,
                                    ProviderKind::remote};

Json bands_to_json(const BandArray& b) { return Json::array({b[0], b[1], b[2], b[3], b[4]}); }

BandArray bands_from_json(const Json& v, const std::string& field) {
  require_array(v, field);
  if (v.size() != kBandCount) schema_error(field, "expected 5 band values");
  BandArray out{};
  for (std::size_t i = 0; i < kBandCount; ++i) {
    out[i] = ObjectReader::as_number(v[i], field + "[" + std::to_string(i) + "]");
  }
  return out;
}

bool in_unit(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

bool valid_session_id(std::string_view id) {
  if (id.empty() || id.size() > 128 || id == "." || id == "..") return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '-' || c == '_' || c == '.';
  });
}

void validate_record(const Record& record, const std::string& path, const SegmentFile& seg,
                     std::vector<Violation>& out) {
  auto add = [&](const std::string& field, const std::string& rule) {
    out.push_back({path + "." + field, rule});
  };
  const std::int64_t t = record_time(record);
  if (t < 0) add("t_ms", "must be non-negative");
  if (t >= seg.end_ms) add("t_ms", "must be < segment end_ms");

  std::visit(
      [&](const auto& r) {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, EegFrame>) {
          if (r.channels.size() != kEegChannels) add("channels", "expected 14");
        } else if constexpr (std::is_same_v<T, GsrSample>) {
          if (!std::isfinite(r.value) || r.value < 0.0) add("value", "must be finite and >= 0");
        } else if constexpr (std::is_same_v<T, MediaRef>) {
          if (!is_lower_hex64(r.digest)) add("digest", "expected 64 lowercase hex chars");
          if (r.path.empty() || r.path.front() == '/' || r.path.find("..") != std::string::npos ||
              r.path.rfind("media/", 0) != 0) {
            add("path", "must be a relative path under media/");
          }
          if (r.kind == MediaKind::audio) {
            if (!r.duration_ms || *r.duration_ms < 0) add("duration_ms", "required for audio");
          } else if (r.duration_ms) {
            add("duration_ms", "only allowed for audio");
          }
        } else if constexpr (std::is_same_v<T, ExpressionCue> ||
                             std::is_same_v<T, FacialExpressionRecord>) {
          if (!in_unit(r.power)) add("power", "must be in [0,1]");
        } else if constexpr (std::is_same_v<T, BandPowerRecord>) {
          if (r.per_channel.size() != kEegChannels) add("per_channel", "expected 14");
          BandArray mean{};
          for (const auto& ch : r.per_channel) {
            for (std::size_t b = 0; b < kBandCount; ++b) {
              if (!std::isfinite(ch[b]) || ch[b] < 0.0) add("per_channel", "must be >= 0");
              mean[b] += ch[b];
            }
          }
          for (std::size_t b = 0; b < kBandCount; ++b) {
            if (!std::isfinite(r.avg[b]) || r.avg[b] < 0.0) add("avg", "must be >= 0");
            if (r.per_channel.empty()) continue;
            mean[b] /= static_cast<double>(r.per_channel.size());
            if (std::abs(r.avg[b] - mean[b]) > 1e-9 * std::abs(mean[b]) + 1e-300) {
              add("avg", "must equal channel mean");
            }
          }
        } else if constexpr (std::is_same_v<T, CognitionRecord>) {
          for (double v : {r.engagement, r.excitement, r.stress, r.relaxation, r.interest, r.focus}) {
            if (!in_unit(v)) {
              add("metrics", "must be in [0,1]");
              break;
            }
          }
        } else if constexpr (std::is_same_v<T, TranscriptRecord>) {
          if (r.t_start_ms > r.t_end_ms) add("t_end_ms", "must be >= t_start_ms");
        } else if constexpr (std::is_same_v<T, SentimentRecord>) {
          double sum = 0.0;
          std::size_t best = 0;
          bool ok = true;
          for (std::size_t i = 0; i < 4; ++i) {
            if (!in_unit(r.scores[i])) ok = false;
            sum += r.scores[i];
            if (r.scores[i] > r.scores[best]) best = i;
          }
          if (!ok) add("scores", "must be in [0,1]");
          if (std::abs(sum - 1.0) > 1e-6) add("scores", "must sum to 1");
          if (static_cast<std::size_t>(r.label) != best) add("label", "must be argmax of scores");
        } else if constexpr (std::is_same_v<T, DesReport>) {
          if (r.t_start_ms > r.t_end_ms) add("t_end_ms", "must be >= t_start_ms");
        } else if constexpr (std::is_same_v<T, ImageAnnotation>) {
          if (r.image_width <= 0 || r.image_height <= 0) add("image_width", "must be positive");
          for (const auto& l : r.labels) {
            if (!in_unit(l.confidence)) add("labels", "confidence must be in [0,1]");
          }
          for (const auto& b : r.face_boxes) {
            if (b.x < 0 || b.y < 0 || b.w <= 0 || b.h <= 0 || b.x + b.w > r.image_width ||
                b.y + b.h > r.image_height) {
              add("face_boxes", "box must lie inside image bounds");
            }
          }
        }
      },
      record);
}

}  // namespace

// ---------------------------------------------------------------------------
// Enum names

std::string_view to_string(SessionStatus s) {
  return s == SessionStatus::recording ? "recording" : "sealed";
}
std::string_view to_string(ProviderKind k) {
  switch (k) {
    case ProviderKind::reference: return "reference";
    case ProviderKind::sidecar: return "sidecar";
    case ProviderKind::remote: return "remote";
  }
  return "";
}
std::string_view to_string(MediaKind k) { return k == MediaKind::image ? "image" : "audio"; }
std::string_view to_string(EyeAction v) {
  switch (v) {
    case EyeAction::neutral: return "neutral";
    case EyeAction::blink: return "blink";
    case EyeAction::wink_left: return "wink_left";
    case EyeAction::wink_right: return "wink_right";
  }
  return "";
}
std::string_view to_string(UpperFace v) {
  switch (v) {
    case UpperFace::neutral: return "neutral";
    case UpperFace::raise_brow: return "raise_brow";
    case UpperFace::furrow_brow: return "furrow_brow";
  }
  return "";
}
std::string_view to_string(LowerFace v) {
  switch (v) {
    case LowerFace::neutral: return "neutral";
    case LowerFace::smile: return "smile";
    case LowerFace::clench: return "clench";
    case LowerFace::frown: return "frown";
  }
  return "";
}
std::string_view to_string(Speaker v) { return v == Speaker::wearer ? "wearer" : "other"; }
std::string_view to_string(SentimentLabel v) {
  switch (v) {
    case SentimentLabel::positive: return "positive";
    case SentimentLabel::negative: return "negative";
    case SentimentLabel::mixed: return "mixed";
    case SentimentLabel::neutral: return "neutral";
  }
  return "";
}

EyeAction eye_action_from_string(std::string_view s) { return enum_from(s, kEyeActions, "eye_action"); }
UpperFace upper_face_from_string(std::string_view s) { return enum_from(s, kUpperFaces, "upper_face"); }
LowerFace lower_face_from_string(std::string_view s) { return enum_from(s, kLowerFaces, "lower_face"); }
Speaker speaker_from_string(std::string_view s) { return enum_from(s, kSpeakers, "speaker"); }

// ---------------------------------------------------------------------------
// Record helpers

std::int64_t record_time(const Record& record) {
  return std::visit(
      [](const auto& r) -> std::int64_t {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, TranscriptRecord> || std::is_same_v<T, DesReport>) {
          return r.t_start_ms;
        } else {
          return r.t_ms;
        }
      },
      record);
}

std::string_view record_kind(const Record& record) {
  return std::visit(
      [](const auto& r) -> std::string_view {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, EegFrame>) return "eeg";
        else if constexpr (std::is_same_v<T, GsrSample>) return "gsr";
        else if constexpr (std::is_same_v<T, MediaRef>) return to_string(r.kind);
        else if constexpr (std::is_same_v<T, ExpressionCue>) return "expression_cue";
        else if constexpr (std::is_same_v<T, BandPowerRecord>) return "band_power";
        else if constexpr (std::is_same_v<T, CognitionRecord>) return "cognition";
        else if constexpr (std::is_same_v<T, FacialExpressionRecord>) return "facial_expression";
        else if constexpr (std::is_same_v<T, TranscriptRecord>) return "transcript";
        else if constexpr (std::is_same_v<T, SentimentRecord>) return "sentiment";
        else if constexpr (std::is_same_v<T, DesReport>) return "des_report";
        else if constexpr (std::is_same_v<T, DesTone>) return "des_tone";
        else return "image_annotation";
      },
      record);
}

bool is_sensor_record(const Record& record) {
  return std::holds_alternative<EegFrame>(record) || std::holds_alternative<GsrSample>(record) ||
         std::holds_alternative<MediaRef>(record) || std::holds_alternative<ExpressionCue>(record);
}

const std::vector<std::string>& all_record_kinds() {
  static const std::vector<std::string> kinds{
      "audio",      "band_power", "cognition", "des_report",      "des_tone",
      "eeg",        "expression_cue", "facial_expression", "gsr", "image",
      "image_annotation", "sentiment", "transcript"};
  return kinds;
}

std::set<std::string> parse_kinds(std::string_view csv) {
  const auto& known = all_record_kinds();
  std::set<std::string> out;
  if (csv.empty() || csv == "all") return {known.begin(), known.end()};
  std::string token;
  std::istringstream in{std::string(csv)};
  while (std::getline(in, token, ',')) {
    if (token.empty()) continue;
    if (token == "des") token = "des_report";
    if (token == "all") {
      out.insert(known.begin(), known.end());
      continue;
    }
    if (std::find(known.begin(), known.end(), token) == known.end()) {
      throw Error(ErrorCode::validation, "kinds: unknown record kind '" + token + "'", "kinds");
    }
    out.insert(token);
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON

std::string canonical_dump(const Json& value) {
  return value.dump(-1, ' ', false, Json::error_handler_t::strict);
}

Json record_to_json(const Record& record) {
  Json j = Json::object();
  j["type"] = std::string(record_kind(record));
  std::visit(
      [&](const auto& r) {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, EegFrame>) {
          j["t_ms"] = r.t_ms;
          j["channels"] = r.channels;
          j["seq"] = r.seq;
        } else if constexpr (std::is_same_v<T, GsrSample>) {
          j["t_ms"] = r.t_ms;
          j["value"] = r.value;
          j["seq"] = r.seq;
        } else if constexpr (std::is_same_v<T, MediaRef>) {
          j["t_ms"] = r.t_ms;
          j["path"] = r.path;
          j["digest"] = r.digest;
          if (r.duration_ms) j["duration_ms"] = *r.duration_ms;
          j["seq"] = r.seq;
        } else if constexpr (std::is_same_v<T, ExpressionCue>) {
          j["t_ms"] = r.t_ms;
          j["eye_action"] = to_string(r.eye_action);
          j["upper_face"] = to_string(r.upper_face);
          j["lower_face"] = to_string(r.lower_face);
          j["power"] = r.power;
          j["seq"] = r.seq;
        } else if constexpr (std::is_same_v<T, BandPowerRecord>) {
          j["t_ms"] = r.t_ms;
          Json per = Json::array();
          for (const auto& ch : r.per_channel) per.push_back(bands_to_json(ch));
          j["per_channel"] = std::move(per);
          j["avg"] = bands_to_json(r.avg);
        } else if constexpr (std::is_same_v<T, CognitionRecord>) {
          j["t_ms"] = r.t_ms;
          j["engagement"] = r.engagement;
          j["excitement"] = r.excitement;
          j["stress"] = r.stress;
          j["relaxation"] = r.relaxation;
          j["interest"] = r.interest;
          j["focus"] = r.focus;
        } else if constexpr (std::is_same_v<T, FacialExpressionRecord>) {
          j["t_ms"] = r.t_ms;
          j["eye_action"] = to_string(r.eye_action);
          j["upper_face"] = to_string(r.upper_face);
          j["lower_face"] = to_string(r.lower_face);
          j["power"] = r.power;
        } else if constexpr (std::is_same_v<T, TranscriptRecord>) {
          j["t_start_ms"] = r.t_start_ms;
          j["t_end_ms"] = r.t_end_ms;
          j["speaker"] = to_string(r.speaker);
          j["text"] = r.text;
        } else if constexpr (std::is_same_v<T, SentimentRecord>) {
          j["t_ms"] = r.t_ms;
          j["label"] = to_string(r.label);
          j["scores"] = r.scores;
        } else if constexpr (std::is_same_v<T, DesReport>) {
          j["t_start_ms"] = r.t_start_ms;
          j["t_end_ms"] = r.t_end_ms;
          j["text"] = r.text;
          j["terminated"] = r.terminated;
        } else if constexpr (std::is_same_v<T, DesTone>) {
          j["t_ms"] = r.t_ms;
        } else if constexpr (std::is_same_v<T, ImageAnnotation>) {
          j["t_ms"] = r.t_ms;
          j["image_width"] = r.image_width;
          j["image_height"] = r.image_height;
          Json labels = Json::array();
          for (const auto& l : r.labels) labels.push_back({{"label", l.label}, {"confidence", l.confidence}});
          j["labels"] = std::move(labels);
          j["texts"] = r.texts;
          Json boxes = Json::array();
          for (const auto& b : r.face_boxes) boxes.push_back({{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}});
          j["face_boxes"] = std::move(boxes);
        }
      },
      record);
  return j;
}

Record record_from_json(const Json& value, const std::string& path) {
  ObjectReader in(value, path);
  const std::string type = in.string("type");
  Record out;
  if (type == "eeg") {
    EegFrame r;
    r.t_ms = in.int64("t_ms");
    const Json& ch = require_array(in.require("channels"), in.field("channels"));
    for (std::size_t i = 0; i < ch.size(); ++i) {
      auto v = ObjectReader::as_int64(ch[i], in.field("channels") + "[" + std::to_string(i) + "]");
      if (v < INT16_MIN || v > INT16_MAX) schema_error(in.field("channels"), "sample out of 16-bit range");
      r.channels.push_back(static_cast<std::int16_t>(v));
    }
    r.seq = in.int64("seq");
    out = std::move(r);
  } else if (type == "gsr") {
    GsrSample r;
    r.t_ms = in.int64("t_ms");
    r.value = in.number("value");
    r.seq = in.int64("seq");
    out = r;
  } else if (type == "image" || type == "audio") {
    MediaRef r;
    r.kind = type == "image" ? MediaKind::image : MediaKind::audio;
    r.t_ms = in.int64("t_ms");
    r.path = in.string("path");
    r.digest = in.string("digest");
    if (const Json* d = in.find("duration_ms")) r.duration_ms = ObjectReader::as_int64(*d, in.field("duration_ms"));
    r.seq = in.int64("seq");
    out = std::move(r);
  } else if (type == "expression_cue" || type == "facial_expression") {
    auto t = in.int64("t_ms");
    auto eye = enum_from(in.string("eye_action"), kEyeActions, in.field("eye_action"));
    auto upper = enum_from(in.string("upper_face"), kUpperFaces, in.field("upper_face"));
    auto lower = enum_from(in.string("lower_face"), kLowerFaces, in.field("lower_face"));
    double power = in.number("power");
    if (type == "expression_cue") {
      out = ExpressionCue{t, eye, upper, lower, power, in.int64("seq")};
    } else {
      out = FacialExpressionRecord{t, eye, upper, lower, power};
    }
  } else if (type == "band_power") {
    BandPowerRecord r;
    r.t_ms = in.int64("t_ms");
    const Json& per = require_array(in.require("per_channel"), in.field("per_channel"));
    for (std::size_t i = 0; i < per.size(); ++i) {
      r.per_channel.push_back(bands_from_json(per[i], in.field("per_channel") + "[" + std::to_string(i) + "]"));
    }
    r.avg = bands_from_json(in.require("avg"), in.field("avg"));
    out = std::move(r);
  } else if (type == "cognition") {
    CognitionRecord r;
    r.t_ms = in.int64("t_ms");
    r.engagement = in.number("engagement");
    r.excitement = in.number("excitement");
    r.stress = in.number("stress");
    r.relaxation = in.number("relaxation");
    r.interest = in.number("interest");
    r.focus = in.number("focus");
    out = r;
  } else if (type == "transcript") {
    TranscriptRecord r;
    r.t_start_ms = in.int64("t_start_ms");
    r.t_end_ms = in.int64("t_end_ms");
    r.speaker = enum_from(in.string("speaker"), kSpeakers, in.field("speaker"));
    r.text = in.string("text");
    out = std::move(r);
  } else if (type == "sentiment") {
    SentimentRecord r;
    r.t_ms = in.int64("t_ms");
    r.label = enum_from(in.string("label"), kSentiments, in.field("label"));
    const Json& s = require_array(in.require("scores"), in.field("scores"));
    if (s.size() != 4) schema_error(in.field("scores"), "expected 4 scores");
    for (std::size_t i = 0; i < 4; ++i) r.scores[i] = ObjectReader::as_number(s[i], in.field("scores"));
    out = r;
  } else if (type == "des_report") {
    DesReport r;
    r.t_start_ms = in.int64("t_start_ms");
    r.t_end_ms = in.int64("t_end_ms");
    r.text = in.string("text");
    r.terminated = in.boolean("terminated");
    out = std::move(r);
  } else if (type == "des_tone") {
    out = DesTone{in.int64("t_ms")};
  } else if (type == "image_annotation") {
    ImageAnnotation r;
    r.t_ms = in.int64("t_ms");
    r.image_width = static_cast<int>(in.int64("image_width"));
    r.image_height = static_cast<int>(in.int64("image_height"));
    const Json& labels = require_array(in.require("labels"), in.field("labels"));
    for (std::size_t i = 0; i < labels.size(); ++i) {
      ObjectReader l(labels[i], in.field("labels") + "[" + std::to_string(i) + "]");
      r.labels.push_back({l.string("label"), l.number("confidence")});
      l.finish();
    }
    const Json& texts = require_array(in.require("texts"), in.field("texts"));
    for (const auto& t : texts) r.texts.push_back(ObjectReader::as_string(t, in.field("texts")));
    const Json& boxes = require_array(in.require("face_boxes"), in.field("face_boxes"));
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      ObjectReader b(boxes[i], in.field("face_boxes") + "[" + std::to_string(i) + "]");
      r.face_boxes.push_back({static_cast<int>(b.int64("x")), static_cast<int>(b.int64("y")),
                              static_cast<int>(b.int64("w")), static_cast<int>(b.int64("h"))});
      b.finish();
    }
    out = std::move(r);
  } else {
    schema_error(in.field("type"), "unknown record type '" + type + "'");
  }
  in.finish();
  return out;
}

namespace {

Json provider_to_json(const ProviderSelection& p) {
  Json j{{"kind", to_string(p.kind)}};
  if (!p.endpoint.empty()) j["endpoint"] = p.endpoint;
  if (!p.sidecar_path.empty()) j["sidecar_path"] = p.sidecar_path;
  return j;
}

ProviderSelection provider_from_json(const Json& v, const std::string& path) {
  ObjectReader in(v, path);
  ProviderSelection p;
  p.kind = enum_from(in.string("kind"), kProviderKinds, in.field("kind"));
  if (const Json* e = in.find("endpoint")) p.endpoint = ObjectReader::as_string(*e, in.field("endpoint"));
  if (const Json* s = in.find("sidecar_path")) p.sidecar_path = ObjectReader::as_string(*s, in.field("sidecar_path"));
  in.finish();
  return p;
}

}  // namespace

Json config_to_json(const SessionConfig& c) {
  return Json{
      {"session_id", c.session_id},
      {"image_period_ms", c.image_period_ms},
      {"gsr_period_ms", c.gsr_period_ms},
      {"eeg_rate_hz", c.eeg_rate_hz},
      {"segment_duration_ms", c.segment_duration_ms},
      {"des_interval_min_s", c.des_interval_min_s},
      {"des_interval_max_s", c.des_interval_max_s},
      {"blur_enabled", c.blur_enabled},
      {"rng_seed", c.rng_seed},
      {"des_start_phrase", c.des_start_phrase},
      {"des_end_phrase", c.des_end_phrase},
      {"providers",
       {{"faces", provider_to_json(c.providers.faces)},
        {"labels", provider_to_json(c.providers.labels)},
        {"transcription", provider_to_json(c.providers.transcription)},
        {"sentiment", provider_to_json(c.providers.sentiment)},
        {"cognition", provider_to_json(c.providers.cognition)},
        {"expression", provider_to_json(c.providers.expression)}}},
  };
}

SessionConfig config_from_json(const Json& value) {
  ObjectReader in(value, "config");
  SessionConfig c;
  c.session_id = in.string("session_id");
  auto opt_int = [&](std::string_view key, std::int64_t& target) {
    if (const Json* v = in.find(key)) target = ObjectReader::as_int64(*v, in.field(key));
  };
  opt_int("image_period_ms", c.image_period_ms);
  opt_int("gsr_period_ms", c.gsr_period_ms);
  opt_int("eeg_rate_hz", c.eeg_rate_hz);
  opt_int("segment_duration_ms", c.segment_duration_ms);
  opt_int("des_interval_min_s", c.des_interval_min_s);
  opt_int("des_interval_max_s", c.des_interval_max_s);
  if (const Json* v = in.find("blur_enabled")) {
    if (!v->is_boolean()) schema_error(in.field("blur_enabled"), "expected boolean");
    c.blur_enabled = v->get<bool>();
  }
  if (const Json* v = in.find("rng_seed")) {
    if (!v->is_number_integer()) schema_error(in.field("rng_seed"), "expected integer");
    c.rng_seed = v->is_number_unsigned() ? v->get<std::uint64_t>()
                                         : static_cast<std::uint64_t>(v->get<std::int64_t>());
  }
  if (const Json* v = in.find("des_start_phrase")) c.des_start_phrase = ObjectReader::as_string(*v, in.field("des_start_phrase"));
  if (const Json* v = in.find("des_end_phrase")) c.des_end_phrase = ObjectReader::as_string(*v, in.field("des_end_phrase"));
  if (const Json* p = in.find("providers")) {
    ObjectReader pr(*p, in.field("providers"));
    auto sel = [&](std::string_view key, ProviderSelection& target) {
      if (const Json* v = pr.find(key)) target = provider_from_json(*v, pr.field(key));
    };
    sel("faces", c.providers.faces);
    sel("labels", c.providers.labels);
    sel("transcription", c.providers.transcription);
    sel("sentiment", c.providers.sentiment);
    sel("cognition", c.providers.cognition);
    sel("expression", c.providers.expression);
    pr.finish();
  }
  in.finish();
  return c;
}

std::vector<Violation> validate_config(const SessionConfig& c) {
  std::vector<Violation> v;
  if (!valid_session_id(c.session_id)) v.push_back({"session_id", "must be 1-128 chars of [A-Za-z0-9._-]"});
  if (c.image_period_ms < 100) v.push_back({"image_period_ms", "must be >= 100"});
  if (c.gsr_period_ms <= 0) v.push_back({"gsr_period_ms", "must be positive"});
  if (c.eeg_rate_hz <= 90) v.push_back({"eeg_rate_hz", "must exceed 90 so every band is below Nyquist"});
  if (c.segment_duration_ms < 1000) v.push_back({"segment_duration_ms", "must be >= 1000"});
  if (c.des_interval_min_s <= 0) v.push_back({"des_interval_min_s", "must be positive"});
  if (c.des_interval_max_s <= 0) v.push_back({"des_interval_max_s", "must be positive"});
  if (c.des_interval_min_s > c.des_interval_max_s) {
    v.push_back({"des_interval_min_s", "must be <= des_interval_max_s"});
  }
  if (c.des_start_phrase.empty() || c.des_end_phrase.empty() || c.des_start_phrase == c.des_end_phrase) {
    v.push_back({"des_start_phrase", "key phrases must be non-empty and distinct"});
  }
  auto check = [&](const char* name, const ProviderSelection& p, bool sidecar_ok) {
    std::string field = std::string("providers.") + name;
    if (p.kind == ProviderKind::remote && p.endpoint.empty()) v.push_back({field, "remote provider needs endpoint"});
    if (p.kind == ProviderKind::sidecar) {
      if (!sidecar_ok) v.push_back({field, "sidecar provider not available for this analyzer"});
      else if (p.sidecar_path.empty()) v.push_back({field, "sidecar provider needs sidecar_path"});
    }
  };
  check("faces", c.providers.faces, true);
  check("labels", c.providers.labels, true);
  check("transcription", c.providers.transcription, true);
  check("sentiment", c.providers.sentiment, false);
  check("cognition", c.providers.cognition, false);
  check("expression", c.providers.expression, false);
  return v;
}

Json manifest_to_json(const SessionManifest& m) {
  Json j{
      {"session_id", m.session_id},
      {"start_epoch_ms", m.start_epoch_ms},
      {"config", config_to_json(m.config)},
      {"segment_count", m.segment_count},
      {"genesis_attestation", m.genesis_attestation},
      {"status", to_string(m.status)},
      {"chain_gaps", m.chain_gaps},
      {"unattested_segments", m.unattested_segments},
      {"record_counts", m.record_counts},
      {"schema_version", kSchemaVersion},
  };
  if (m.final_attestation) j["final_attestation"] = *m.final_attestation;
  return j;
}

SessionManifest manifest_from_json(const Json& value) {
  ObjectReader in(value, "manifest");
  SessionManifest m;
  if (in.string("schema_version") != kSchemaVersion) schema_error("manifest.schema_version", "unsupported version");
  m.session_id = in.string("session_id");
  m.start_epoch_ms = in.int64("start_epoch_ms");
  m.config = config_from_json(in.require("config"));
  m.segment_count = in.int64("segment_count");
  m.genesis_attestation = in.string("genesis_attestation");
  auto status = in.string("status");
  if (status == "recording") m.status = SessionStatus::recording;
  else if (status == "sealed") m.status = SessionStatus::sealed;
  else schema_error("manifest.status", "unknown status");
  for (const auto& g : require_array(in.require("chain_gaps"), "manifest.chain_gaps")) {
    m.chain_gaps.push_back(ObjectReader::as_int64(g, "manifest.chain_gaps"));
  }
  for (const auto& g : require_array(in.require("unattested_segments"), "manifest.unattested_segments")) {
    m.unattested_segments.push_back(ObjectReader::as_int64(g, "manifest.unattested_segments"));
  }
  const Json& counts = in.require("record_counts");
  if (!counts.is_object()) schema_error("manifest.record_counts", "expected object");
  for (auto it = counts.begin(); it != counts.end(); ++it) {
    m.record_counts[it.key()] = ObjectReader::as_int64(it.value(), "manifest.record_counts." + it.key());
  }
  if (const Json* f = in.find("final_attestation")) m.final_attestation = ObjectReader::as_string(*f, "manifest.final_attestation");
  in.finish();
  return m;
}

// ---------------------------------------------------------------------------
// Segments

std::vector<Violation> validate_segment(const SegmentFile& s) {
  std::vector<Violation> v;
  if (s.schema_version != kSchemaVersion) v.push_back({"schema_version", "expected \"1.0\""});
  if (!valid_session_id(s.session_id)) v.push_back({"session_id", "invalid session id"});
  if (s.segment_index < 0) v.push_back({"segment_index", "must be >= 0"});
  if (s.segment_index == 0) {
    if (s.prev_attestation != kGenesisAttestation) v.push_back({"prev_attestation", "segment 0 must carry genesis"});
  } else if (!is_lower_hex64(s.prev_attestation) && s.prev_attestation != kPendingAttestation) {
    v.push_back({"prev_attestation", "expected 64 lowercase hex chars or PENDING"});
  }
  if (s.start_ms < 0 || s.start_ms > s.end_ms) v.push_back({"start_ms", "must satisfy 0 <= start_ms <= end_ms"});
  for (std::size_t i = 0; i < s.records.size(); ++i) {
    std::string path = "records[" + std::to_string(i) + "]";
    if (i > 0 && record_time(s.records[i]) < record_time(s.records[i - 1])) {
      v.push_back({path + ".t_ms", "records must be sorted by t_ms"});
    }
    validate_record(s.records[i], path, s, v);
  }
  return v;
}

std::string serialize_segment(const SegmentFile& s) {
  auto violations = validate_segment(s);
  if (!violations.empty()) {
    const auto& first = violations.front();
    throw Error(ErrorCode::validation, first.field + ": " + first.rule, first.field);
  }
  Json records = Json::array();
  for (const auto& r : s.records) records.push_back(record_to_json(r));
  Json j{
      {"schema_version", s.schema_version},
      {"session_id", s.session_id},
      {"segment_index", s.segment_index},
      {"prev_attestation", s.prev_attestation},
      {"start_ms", s.start_ms},
      {"end_ms", s.end_ms},
      {"records", std::move(records)},
  };
  return canonical_dump(j);
}

SegmentFile parse_segment(std::string_view bytes) {
  Json j;
  try {
    j = Json::parse(bytes.begin(), bytes.end());
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::parse, "malformed JSON at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  ObjectReader in(j, "segment");
  SegmentFile s;
  s.schema_version = in.string("schema_version");
  if (s.schema_version != kSchemaVersion) schema_error("segment.schema_version", "unsupported version");
  s.session_id = in.string("session_id");
  s.segment_index = in.int64("segment_index");
  s.prev_attestation = in.string("prev_attestation");
  s.start_ms = in.int64("start_ms");
  s.end_ms = in.int64("end_ms");
  const Json& records = require_array(in.require("records"), "segment.records");
  s.records.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    s.records.push_back(record_from_json(records[i], "segment.records[" + std::to_string(i) + "]"));
  }
  in.finish();
  auto violations = validate_segment(s);
  if (!violations.empty()) {
    throw Error(ErrorCode::validation, "segment." + violations.front().field + ": " + violations.front().rule,
                "segment." + violations.front().field);
  }
  return s;
}

}  // namespace fprig
