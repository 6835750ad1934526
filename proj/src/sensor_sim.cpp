#include "fprig/sensor_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fprig/error.hpp"
#include "fprig/http_util.hpp"
#include "fprig/image.hpp"
#include "fprig/live_client.hpp"

namespace fprig {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) { return splitmix64(a ^ splitmix64(b)); }

// Uniform in [-1, 1], a pure function of its keys.
double keyed_uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  auto bits = mix(mix(seed, a), b) >> 11;  // 53 bits
  return static_cast<double>(bits) / static_cast<double>(1ULL << 53) * 2.0 - 1.0;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::int64_t line_duration(const SpeechScriptLine& line) {
  if (line.duration_ms > 0) return line.duration_ms;
  std::int64_t words = 0;
  bool in_word = false;
  for (char c : line.text) {
    bool space = std::isspace(static_cast<unsigned char>(c));
    if (!space && !in_word) ++words;
    in_word = !space;
  }
  return std::max<std::int64_t>(500, 400 * words);
}

bool box_inside(const Box& b) {
  return b.x >= 0 && b.y >= 0 && b.w > 0 && b.h > 0 && b.x + b.w <= kImageWidth && b.y + b.h <= kImageHeight;
}

const ImageScriptEntry* scene_at(const Scenario& s, std::int64_t t_ms) {
  const ImageScriptEntry* best = nullptr;
  for (const auto& e : s.image_script) {
    if (e.t_ms <= t_ms && (best == nullptr || e.t_ms >= best->t_ms)) best = &e;
  }
  return best;
}

template <typename T>
T value_or(const Json& j, const char* key, T fallback) {
  auto it = j.find(key);
  return it == j.end() ? fallback : it->template get<T>();
}

}  // namespace

// ---------------------------------------------------------------------------
// Scenario

std::vector<Violation> validate_scenario(const Scenario& s) {
  std::vector<Violation> v = validate_config(s.config);
  const double nyquist = static_cast<double>(s.config.eeg_rate_hz) / 2.0;
  auto in_range = [&](std::int64_t t) { return t >= 0 && (t < s.duration_ms || s.duration_ms == 0); };
  if (s.duration_ms < 0) v.push_back({"duration_ms", "must be >= 0"});
  if (!(s.noise_amplitude >= 0.0)) v.push_back({"noise_amplitude", "must be >= 0"});
  if (s.audio_chunk_ms <= 0) v.push_back({"audio_chunk_ms", "must be positive"});
  for (std::size_t i = 0; i < s.eeg_tones.size(); ++i) {
    const auto& t = s.eeg_tones[i];
    auto f = "eeg_tones[" + std::to_string(i) + "]";
    if (!(t.frequency_hz > 0.0) || t.frequency_hz >= nyquist) v.push_back({f + ".frequency_hz", "must be in (0, Nyquist)"});
    if (t.t_start_ms < 0 || t.t_end_ms < t.t_start_ms) v.push_back({f + ".t_start_ms", "invalid interval"});
    for (int c : t.channels) {
      if (c < 0 || c >= static_cast<int>(kEegChannels)) v.push_back({f + ".channels", "channel out of range"});
    }
  }
  for (std::size_t i = 0; i < s.gsr_events.size(); ++i) {
    if (!in_range(s.gsr_events[i].t_ms)) v.push_back({"gsr_events[" + std::to_string(i) + "].t_ms", "outside [0, duration)"});
  }
  for (std::size_t i = 0; i < s.image_script.size(); ++i) {
    const auto& e = s.image_script[i];
    auto f = "image_script[" + std::to_string(i) + "]";
    if (!in_range(e.t_ms)) v.push_back({f + ".t_ms", "outside [0, duration)"});
    for (const auto& b : e.face_boxes) {
      if (!box_inside(b)) v.push_back({f + ".face_boxes", "box outside 320x240 image"});
    }
  }
  for (std::size_t i = 0; i < s.expression_events.size(); ++i) {
    if (!in_range(s.expression_events[i].t_ms)) v.push_back({"expression_events[" + std::to_string(i) + "].t_ms", "outside [0, duration)"});
  }
  for (std::size_t i = 0; i < s.speech_script.size(); ++i) {
    const auto& a = s.speech_script[i];
    if (!in_range(a.t_start_ms)) v.push_back({"speech_script[" + std::to_string(i) + "].t_start_ms", "outside [0, duration)"});
    for (std::size_t j = i + 1; j < s.speech_script.size(); ++j) {
      const auto& b = s.speech_script[j];
      if (a.speaker != b.speaker) continue;
      if (a.t_start_ms < b.t_start_ms + line_duration(b) && b.t_start_ms < a.t_start_ms + line_duration(a)) {
        v.push_back({"speech_script[" + std::to_string(j) + "]", "overlaps another line of the same speaker"});
      }
    }
  }
  return v;
}

void check_scenario(const Scenario& s) {
  auto v = validate_scenario(s);
  if (!v.empty()) throw Error(ErrorCode::configuration, v.front().field + ": " + v.front().rule, v.front().field);
}

Scenario scenario_from_json(const Json& j) {
  try {
    Scenario s;
    s.rng_seed = value_or<std::uint64_t>(j, "rng_seed", 0);
    if (j.contains("config")) {
      Json c = j.at("config");
      if (!c.contains("session_id")) c["session_id"] = "sim-" + std::to_string(s.rng_seed);
      s.config = config_from_json(c);
    } else {
      s.config.session_id = "sim-" + std::to_string(s.rng_seed);
    }
    if (!j.contains("config") || !j.at("config").contains("rng_seed")) s.config.rng_seed = s.rng_seed;
    s.duration_ms = value_or<std::int64_t>(j, "duration_ms", 60000);
    s.noise_amplitude = value_or(j, "noise_amplitude", 0.0);
    s.gsr_baseline = value_or(j, "gsr_baseline", 2.0);
    s.audio_chunk_ms = value_or<std::int64_t>(j, "audio_chunk_ms", 5000);
    for (const auto& t : j.value("eeg_tones", Json::array())) {
      EegTone tone;
      tone.channels = value_or(t, "channels", std::vector<int>{});
      tone.frequency_hz = t.at("frequency_hz").get<double>();
      tone.amplitude = value_or(t, "amplitude", 1000.0);
      tone.t_start_ms = value_or<std::int64_t>(t, "t_start_ms", 0);
      tone.t_end_ms = value_or<std::int64_t>(t, "t_end_ms", s.duration_ms);
      s.eeg_tones.push_back(std::move(tone));
    }
    for (const auto& e : j.value("gsr_events", Json::array())) {
      s.gsr_events.push_back({e.at("t_ms").get<std::int64_t>(), e.at("delta").get<double>()});
    }
    for (const auto& l : j.value("speech_script", Json::array())) {
      s.speech_script.push_back({l.at("t_start_ms").get<std::int64_t>(), value_or<std::int64_t>(l, "duration_ms", 0),
                                 speaker_from_string(value_or<std::string>(l, "speaker", "wearer")),
                                 l.at("text").get<std::string>()});
    }
    for (const auto& e : j.value("image_script", Json::array())) {
      ImageScriptEntry entry;
      entry.t_ms = e.at("t_ms").get<std::int64_t>();
      entry.scene = value_or<std::string>(e, "scene", "");
      for (const auto& b : e.value("face_boxes", Json::array())) entry.face_boxes.push_back(box_from_json(b));
      entry.texts = value_or(e, "texts", std::vector<std::string>{});
      entry.labels = value_or(e, "labels", std::vector<std::string>{});
      s.image_script.push_back(std::move(entry));
    }
    for (const auto& e : j.value("expression_events", Json::array())) {
      ExpressionEvent ev;
      ev.t_ms = e.at("t_ms").get<std::int64_t>();
      ev.expression = {eye_action_from_string(value_or<std::string>(e, "eye_action", "neutral")),
                       upper_face_from_string(value_or<std::string>(e, "upper_face", "neutral")),
                       lower_face_from_string(value_or<std::string>(e, "lower_face", "neutral")),
                       value_or(e, "power", 1.0)};
      s.expression_events.push_back(ev);
    }
    return s;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::configuration, std::string("scenario: ") + e.what(), "scenario");
  }
}

Json scenario_to_json(const Scenario& s) {
  Json tones = Json::array();
  for (const auto& t : s.eeg_tones) {
    tones.push_back({{"channels", t.channels}, {"frequency_hz", t.frequency_hz}, {"amplitude", t.amplitude},
                     {"t_start_ms", t.t_start_ms}, {"t_end_ms", t.t_end_ms}});
  }
  Json gsr = Json::array();
  for (const auto& e : s.gsr_events) gsr.push_back({{"t_ms", e.t_ms}, {"delta", e.delta}});
  Json speech = Json::array();
  for (const auto& l : s.speech_script) {
    speech.push_back({{"t_start_ms", l.t_start_ms}, {"duration_ms", l.duration_ms},
                      {"speaker", to_string(l.speaker)}, {"text", l.text}});
  }
  Json images = Json::array();
  for (const auto& e : s.image_script) {
    Json boxes = Json::array();
    for (const auto& b : e.face_boxes) boxes.push_back(box_to_json(b));
    images.push_back({{"t_ms", e.t_ms}, {"scene", e.scene}, {"face_boxes", boxes}, {"texts", e.texts},
                      {"labels", e.labels}});
  }
  Json expr = Json::array();
  for (const auto& e : s.expression_events) {
    expr.push_back({{"t_ms", e.t_ms}, {"eye_action", to_string(e.expression.eye_action)},
                    {"upper_face", to_string(e.expression.upper_face)},
                    {"lower_face", to_string(e.expression.lower_face)}, {"power", e.expression.power}});
  }
  return {{"config", config_to_json(s.config)},
          {"duration_ms", s.duration_ms},
          {"eeg_tones", tones},
          {"noise_amplitude", s.noise_amplitude},
          {"gsr_baseline", s.gsr_baseline},
          {"gsr_events", gsr},
          {"speech_script", speech},
          {"image_script", images},
          {"expression_events", expr},
          {"audio_chunk_ms", s.audio_chunk_ms},
          {"rng_seed", s.rng_seed}};
}

// ---------------------------------------------------------------------------
// Generators

std::int64_t eeg_frame_time(std::int64_t index, std::int64_t rate_hz) { return index * 1000 / rate_hz; }

std::int64_t first_eeg_frame_at_or_after(std::int64_t t_ms, std::int64_t rate_hz) {
  if (t_ms <= 0) return 0;
  return (t_ms * rate_hz + 999) / 1000;
}

std::vector<EegFrame> gen_eeg(const Scenario& s, std::int64_t t0_ms, std::int64_t t1_ms) {
  const auto rate = s.config.eeg_rate_hz;
  const double nyquist = static_cast<double>(rate) / 2.0;
  for (const auto& tone : s.eeg_tones) {
    if (!(tone.frequency_hz > 0.0) || tone.frequency_hz >= nyquist) {
      throw Error(ErrorCode::configuration, "eeg tone frequency must be in (0, Nyquist)", "eeg_tones.frequency_hz");
    }
  }
  t1_ms = std::min(t1_ms, s.duration_ms);
  std::vector<EegFrame> out;
  if (t0_ms >= t1_ms) return out;
  const auto i0 = first_eeg_frame_at_or_after(t0_ms, rate);
  const auto i1 = first_eeg_frame_at_or_after(t1_ms, rate);
  out.reserve(static_cast<std::size_t>(i1 - i0));
  for (auto i = i0; i < i1; ++i) {
    EegFrame f;
    f.t_ms = eeg_frame_time(i, rate);
    f.seq = i + 1;
    f.channels.resize(kEegChannels);
    const double t = static_cast<double>(i) / static_cast<double>(rate);
    for (std::size_t c = 0; c < kEegChannels; ++c) {
      double v = 0.0;
      for (const auto& tone : s.eeg_tones) {
        if (f.t_ms < tone.t_start_ms || f.t_ms >= tone.t_end_ms) continue;
        if (!tone.channels.empty() &&
            std::find(tone.channels.begin(), tone.channels.end(), static_cast<int>(c)) == tone.channels.end()) {
          continue;
        }
        v += tone.amplitude * std::sin(2.0 * std::numbers::pi * tone.frequency_hz * t);
      }
      if (s.noise_amplitude > 0.0) {
        v += s.noise_amplitude * keyed_uniform(s.rng_seed, static_cast<std::uint64_t>(i), c);
      }
      f.channels[c] = static_cast<std::int16_t>(std::clamp(std::round(v), -32768.0, 32767.0));
    }
    out.push_back(std::move(f));
  }
  return out;
}

double gsr_value_at(const Scenario& s, std::int64_t t_ms) {
  double v = s.gsr_baseline;
  for (const auto& e : s.gsr_events) {
    if (e.t_ms <= t_ms) v += e.delta * std::exp(-static_cast<double>(t_ms - e.t_ms) / kGsrDecayMs);
  }
  return std::max(0.0, v);
}

std::vector<GsrSample> gen_gsr(const Scenario& s, std::int64_t t0_ms, std::int64_t t1_ms) {
  const auto period = s.config.gsr_period_ms;
  t1_ms = std::min(t1_ms, s.duration_ms);
  std::vector<GsrSample> out;
  for (auto k = (std::max<std::int64_t>(t0_ms, 0) + period - 1) / period; k * period < t1_ms; ++k) {
    out.push_back({k * period, gsr_value_at(s, k * period), k + 1});
  }
  return out;
}

GeneratedImage gen_image(const Scenario& s, std::int64_t t_ms) {
  const auto* scene = scene_at(s, t_ms);
  Image img;
  img.width = kImageWidth;
  img.height = kImageHeight;
  img.rgb.resize(static_cast<std::size_t>(kImageWidth) * kImageHeight * 3);

  const std::uint64_t scene_hash = fnv1a(scene ? scene->scene : std::string_view{});
  const std::uint8_t base[3] = {static_cast<std::uint8_t>(64 + (scene_hash & 0x7f)),
                                static_cast<std::uint8_t>(64 + ((scene_hash >> 8) & 0x7f)),
                                static_cast<std::uint8_t>(64 + ((scene_hash >> 16) & 0x7f))};
  for (int y = 0; y < kImageHeight; ++y) {
    for (int x = 0; x < kImageWidth; ++x) {
      auto* p = img.pixel(x, y);
      int shade = (x * 16) / kImageWidth - 8;  // gentle horizontal gradient
      for (int c = 0; c < 3; ++c) p[c] = static_cast<std::uint8_t>(std::clamp(base[c] + shade, 0, 255));
    }
  }

  GeneratedImage out;
  if (scene != nullptr) {
    // Embedded text is drawn as dark bars along the bottom edge.
    int bar_y = kImageHeight - 12;
    for (const auto& text : scene->texts) {
      int w = std::min<int>(kImageWidth - 8, 8 * static_cast<int>(text.size()));
      for (int y = bar_y; y < bar_y + 8 && y >= 0; ++y) {
        for (int x = 4; x < 4 + w; ++x) {
          auto* p = img.pixel(x, y);
          p[0] = p[1] = p[2] = 16;
        }
      }
      bar_y -= 12;
    }
    const std::uint64_t key = mix(s.rng_seed, scene_hash ^ static_cast<std::uint64_t>(t_ms));
    for (std::size_t bi = 0; bi < scene->face_boxes.size(); ++bi) {
      const auto& b = scene->face_boxes[bi];
      if (!box_inside(b)) throw Error(ErrorCode::configuration, "face box outside image bounds", "face_boxes");
      for (int y = b.y; y < b.y + b.h; ++y) {
        for (int x = b.x; x < b.x + b.w; ++x) {
          auto* p = img.pixel(x, y);
          auto r = mix(key + bi, static_cast<std::uint64_t>(y) * kImageWidth + static_cast<std::uint64_t>(x));
          p[0] = static_cast<std::uint8_t>(r);
          p[1] = static_cast<std::uint8_t>(r >> 8);
          p[2] = static_cast<std::uint8_t>(r >> 16);
        }
      }
    }
    out.truth.face_boxes = scene->face_boxes;
    out.truth.labels = scene->labels;
    out.truth.texts = scene->texts;
  }
  out.bytes = encode_ppm(img);
  return out;
}

std::string encode_wav(std::span<const std::int16_t> samples, int rate_hz) {
  auto put32 = [](std::string& s, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  };
  auto put16 = [](std::string& s, std::uint16_t v) {
    s.push_back(static_cast<char>(v & 0xff));
    s.push_back(static_cast<char>(v >> 8));
  };
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  put32(out, 16);
  put16(out, 1);  // PCM
  put16(out, 1);  // mono
  put32(out, static_cast<std::uint32_t>(rate_hz));
  put32(out, static_cast<std::uint32_t>(rate_hz * 2));
  put16(out, 2);
  put16(out, 16);
  out += "data";
  put32(out, data_bytes);
  for (auto v : samples) put16(out, static_cast<std::uint16_t>(v));
  return out;
}

GeneratedAudio gen_audio(const Scenario& s, std::int64_t t0_ms, std::int64_t t1_ms) {
  GeneratedAudio out;
  t1_ms = std::max(t0_ms, t1_ms);
  out.duration_ms = t1_ms - t0_ms;
  const auto n = static_cast<std::size_t>(out.duration_ms * kAudioRateHz / 1000);
  std::vector<std::int16_t> pcm(n, 0);
  for (std::size_t i = 0; i < s.speech_script.size(); ++i) {
    const auto& line = s.speech_script[i];
    const auto start = line.t_start_ms;
    const auto end = start + line_duration(line);
    for (std::size_t j = i + 1; j < s.speech_script.size(); ++j) {
      const auto& other = s.speech_script[j];
      if (other.speaker == line.speaker && other.t_start_ms < end && start < other.t_start_ms + line_duration(other)) {
        throw Error(ErrorCode::configuration, "overlapping speech lines for one speaker", "speech_script");
      }
    }
    if (end <= t0_ms || start >= t1_ms) continue;
    // Tone-coded speech: one carrier per speaker.
    const double freq = line.speaker == Speaker::wearer ? 220.0 : 440.0;
    auto a = static_cast<std::size_t>(std::max<std::int64_t>(start - t0_ms, 0) * kAudioRateHz / 1000);
    auto b = static_cast<std::size_t>(std::min<std::int64_t>(end - t0_ms, out.duration_ms) * kAudioRateHz / 1000);
    for (auto k = a; k < b && k < n; ++k) {
      double t = static_cast<double>(k) / kAudioRateHz + static_cast<double>(t0_ms) / 1000.0;
      double v = pcm[k] + 4000.0 * std::sin(2.0 * std::numbers::pi * freq * t);
      pcm[k] = static_cast<std::int16_t>(std::clamp(std::round(v), -32768.0, 32767.0));
    }
    if (start >= t0_ms && start < t1_ms) {
      out.truth.lines.push_back({start - t0_ms, end - t0_ms, line.speaker, line.text});
    }
  }
  out.bytes = encode_wav(pcm, kAudioRateHz);
  return out;
}

// ---------------------------------------------------------------------------
// Streaming

namespace {

int stream_rank(StreamKind k) {
  switch (k) {
    case StreamKind::gsr: return 0;
    case StreamKind::expression: return 1;
    case StreamKind::image: return 2;
    case StreamKind::audio: return 3;
    case StreamKind::eeg: return 4;
  }
  return 5;
}

}  // namespace

std::vector<IngestEnvelope> build_envelopes(const Scenario& s, std::int64_t t0_ms, std::int64_t t1_ms) {
  std::vector<IngestEnvelope> out;
  const auto& sid = s.config.session_id;
  t1_ms = std::min(t1_ms, s.duration_ms);
  if (t0_ms >= t1_ms) return out;

  for (auto& g : gen_gsr(s, t0_ms, t1_ms)) {
    out.push_back({sid, StreamKind::gsr, g.t_ms, g.seq, GsrPayload{g.value}});
  }
  std::vector<const ExpressionEvent*> events;
  for (const auto& e : s.expression_events) events.push_back(&e);
  std::stable_sort(events.begin(), events.end(), [](auto* a, auto* b) { return a->t_ms < b->t_ms; });
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (events[i]->t_ms >= t0_ms && events[i]->t_ms < t1_ms) {
      out.push_back({sid, StreamKind::expression, events[i]->t_ms, static_cast<std::int64_t>(i) + 1,
                     events[i]->expression});
    }
  }
  const auto ip = s.config.image_period_ms;
  for (auto k = (std::max<std::int64_t>(t0_ms, 0) + ip - 1) / ip; k * ip < t1_ms; ++k) {
    auto img = gen_image(s, k * ip);
    out.push_back({sid, StreamKind::image, k * ip, k + 1, ImagePayload{std::move(img.bytes), std::move(img.truth)}});
  }
  const auto ap = s.audio_chunk_ms;
  for (auto k = (std::max<std::int64_t>(t0_ms, 0) + ap - 1) / ap; k * ap < t1_ms; ++k) {
    auto start = k * ap;
    auto aud = gen_audio(s, start, std::min(start + ap, s.duration_ms));
    out.push_back({sid, StreamKind::audio, start, k + 1,
                   AudioPayload{std::move(aud.bytes), aud.duration_ms, std::move(aud.truth)}});
  }
  for (auto& f : gen_eeg(s, t0_ms, t1_ms)) {
    out.push_back({sid, StreamKind::eeg, f.t_ms, f.seq, EegPayload{std::move(f.channels)}});
  }
  std::stable_sort(out.begin(), out.end(), [](const IngestEnvelope& a, const IngestEnvelope& b) {
    if (a.t_ms != b.t_ms) return a.t_ms < b.t_ms;
    return stream_rank(a.stream) < stream_rank(b.stream);
  });
  return out;
}

Json summary_to_json(const TransmissionSummary& s) {
  return {{"session_id", s.session_id},
          {"sent", s.sent},
          {"acked", s.acked},
          {"duplicates", s.duplicates},
          {"tones_received", s.tones_received},
          {"manifest", manifest_to_json(s.final_manifest)}};
}

TransmissionSummary run_scenario(const Scenario& s, std::string_view endpoint, bool listen_for_tones) {
  check_scenario(s);
  TransmissionSummary summary;
  summary.session_id = s.config.session_id;
  JsonClient client(endpoint, 30);
  client.post("/sessions", config_to_json(s.config));

  std::unique_ptr<LiveClient> live;
  if (listen_for_tones) {
    try {
      live = std::make_unique<LiveClient>(endpoint, s.config.session_id);
    } catch (const Error&) {
      live.reset();  // tone prompts are advisory; recording proceeds without them
    }
  }
  auto drain_tones = [&](std::chrono::milliseconds wait) {
    if (!live) return false;
    while (auto ev = live->next(wait)) {
      auto type = ev->value("event", std::string{});
      if (type == "tone") ++summary.tones_received;
      if (type == "sealed") return true;
      wait = std::chrono::milliseconds(0);
    }
    return false;
  };

  const std::string ingest_path = "/sessions/" + s.config.session_id + "/ingest";
  constexpr std::int64_t kWindowMs = 1000;
  constexpr std::size_t kMaxBatch = 512;
  for (std::int64_t t = 0; t < s.duration_ms; t += kWindowMs) {
    auto envelopes = build_envelopes(s, t, t + kWindowMs);
    for (std::size_t start = 0; start < envelopes.size(); start += kMaxBatch) {
      Json batch = Json::array();
      for (std::size_t i = start; i < std::min(envelopes.size(), start + kMaxBatch); ++i) {
        batch.push_back(envelope_to_json(envelopes[i]));
        ++summary.sent[std::string(to_string(envelopes[i].stream))];
      }
      auto acks = client.post(ingest_path, batch);
      for (const auto& a : acks) {
        auto stream = a.at("stream").get<std::string>();
        if (a.at("status").get<std::string>() == "accepted") ++summary.acked[stream];
        else ++summary.duplicates[stream];
      }
    }
    drain_tones(std::chrono::milliseconds(0));
  }
  summary.final_manifest = manifest_from_json(client.post("/sessions/" + s.config.session_id + "/stop", Json::object()));
  if (live) {
    auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(2);
    while (std::chrono::steady_clock::now() < deadline && !drain_tones(std::chrono::milliseconds(100))) {
    }
  }
  return summary;
}

}  // namespace fprig
