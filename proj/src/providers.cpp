#include "fprig/providers.hpp"

#include <algorithm>
#include <cctype>

#include "fprig/analysis.hpp"
#include "fprig/crypto.hpp"
#include "fprig/error.hpp"
#include "fprig/file_util.hpp"
#include "fprig/http_util.hpp"

namespace fprig {

namespace {

#include "lexicon_data.inc"  // kBuiltinLexicon

void check_wav(std::string_view wav) {
  if (wav.size() < 44 || wav.substr(0, 4) != "RIFF" || wav.substr(8, 4) != "WAVE") {
    throw Error(ErrorCode::format, "audio chunk is not a RIFF/WAVE file");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Sentiment

Lexicon Lexicon::parse(std::string_view text) {
  std::unordered_map<std::string, int> valence;
  std::size_t line_no = 0;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw Error(ErrorCode::parse, "lexicon line " + std::to_string(line_no) + ": expected word<TAB>+1|-1");
    }
    auto word = std::string(line.substr(0, tab));
    auto score = line.substr(tab + 1);
    int v = 0;
    if (score == "+1" || score == "1") v = 1;
    else if (score == "-1") v = -1;
    else throw Error(ErrorCode::parse, "lexicon line " + std::to_string(line_no) + ": score must be +1 or -1");
    std::transform(word.begin(), word.end(), word.begin(), [](unsigned char c) { return std::tolower(c); });
    valence[word] = v;
  }
  return Lexicon(std::move(valence));
}

Lexicon Lexicon::load(const std::filesystem::path& path) { return parse(read_file(path)); }

const Lexicon& Lexicon::builtin() {
  static const Lexicon lexicon = parse(kBuiltinLexicon);
  return lexicon;
}

int Lexicon::valence(std::string_view word) const {
  auto it = valence_.find(std::string(word));
  return it == valence_.end() ? 0 : it->second;
}

std::vector<std::string> tokenize_words(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c == '\'') {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

SentimentRecord sentiment(std::string_view text, std::int64_t t_ms, const Lexicon& lexicon) {
  int p = 0;
  int n = 0;
  for (const auto& w : tokenize_words(text)) {
    int v = lexicon.valence(w);
    if (v > 0) ++p;
    if (v < 0) ++n;
  }
  SentimentRecord r;
  r.t_ms = t_ms;
  if (p + n == 0) {
    r.label = SentimentLabel::neutral;
    r.scores = {0.0, 0.0, 0.0, 1.0};
  } else if (p >= 1 && n >= 1) {
    double total = 2.0 * (p + n);
    r.label = SentimentLabel::mixed;
    r.scores = {p / total, n / total, 0.5, 0.0};
  } else if (p > n) {
    r.label = SentimentLabel::positive;
    r.scores = {1.0, 0.0, 0.0, 0.0};
  } else {
    r.label = SentimentLabel::negative;
    r.scores = {0.0, 1.0, 0.0, 0.0};
  }
  return r;
}

FacialExpressionRecord facial_expression(std::span<const EegFrame> frames, std::span<const ExpressionCue> cues,
                                         std::int64_t hop_ms) {
  FacialExpressionRecord r;
  if (frames.empty()) return r;
  r.t_ms = frames.front().t_ms;
  const std::int64_t end = r.t_ms + hop_ms;
  for (const auto& cue : cues) {
    if (cue.t_ms >= r.t_ms && cue.t_ms < end) {
      return {cue.t_ms, cue.eye_action, cue.upper_face, cue.lower_face, std::clamp(cue.power, 0.0, 1.0)};
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Reference provider

std::vector<Box> ReferenceProvider::detect_faces(const Image&, std::int64_t t_ms, const ImageTruth* truth) {
  if (truth == nullptr) throw Error(ErrorCode::provider, "no sidecar truth for image at t=" + std::to_string(t_ms));
  return truth->face_boxes;
}

ImageAnnotation ReferenceProvider::annotate_image(const Image& image, std::int64_t t_ms, const ImageTruth* truth) {
  if (truth == nullptr) throw Error(ErrorCode::provider, "no sidecar truth for image at t=" + std::to_string(t_ms));
  ImageAnnotation a;
  a.t_ms = t_ms;
  a.image_width = image.width;
  a.image_height = image.height;
  for (const auto& l : truth->labels) a.labels.push_back({l, 1.0});
  a.texts = truth->texts;
  for (const auto& b : truth->face_boxes) {
    if (auto c = clip_box(b, image.width, image.height)) a.face_boxes.push_back(*c);
  }
  return a;
}

std::vector<TranscriptRecord> ReferenceProvider::transcribe(std::string_view wav, std::int64_t chunk_t0_ms,
                                                            const AudioTruth* truth) {
  check_wav(wav);
  if (truth == nullptr) {
    throw Error(ErrorCode::provider, "no sidecar truth for audio at t=" + std::to_string(chunk_t0_ms));
  }
  std::vector<TranscriptRecord> out;
  for (const auto& line : truth->lines) {
    out.push_back({chunk_t0_ms + line.t_start_ms, chunk_t0_ms + line.t_end_ms, line.speaker, line.text});
  }
  return out;
}

SentimentRecord ReferenceProvider::analyze_sentiment(std::string_view text, std::int64_t t_ms) {
  return fprig::sentiment(text, t_ms, lexicon_);
}

CognitionRecord ReferenceProvider::cognition(const BandPowerRecord& bp, double gsr_norm) {
  return cognition_metrics(bp, gsr_norm);
}

FacialExpressionRecord ReferenceProvider::expression(std::span<const EegFrame> frames,
                                                     std::span<const ExpressionCue> cues) {
  return facial_expression(frames, cues);
}

// ---------------------------------------------------------------------------
// Sidecar file provider

SidecarFileProvider::SidecarFileProvider(const std::filesystem::path& path) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::provider, "sidecar file " + path.string() + ": " + e.what());
  }
  if (auto it = j.find("images"); it != j.end()) {
    for (auto e = it->begin(); e != it->end(); ++e) images_[std::stoll(e.key())] = image_truth_from_json(e.value());
  }
  if (auto it = j.find("audio"); it != j.end()) {
    for (auto e = it->begin(); e != it->end(); ++e) audio_[std::stoll(e.key())] = audio_truth_from_json(e.value());
  }
}

const ImageTruth& SidecarFileProvider::image_truth(std::int64_t t_ms) const {
  auto it = images_.find(t_ms);
  if (it == images_.end()) throw Error(ErrorCode::provider, "sidecar has no image entry for t=" + std::to_string(t_ms));
  return it->second;
}

std::vector<Box> SidecarFileProvider::detect_faces(const Image& image, std::int64_t t_ms, const ImageTruth*) {
  return ReferenceProvider::detect_faces(image, t_ms, &image_truth(t_ms));
}

ImageAnnotation SidecarFileProvider::annotate_image(const Image& image, std::int64_t t_ms, const ImageTruth*) {
  return ReferenceProvider::annotate_image(image, t_ms, &image_truth(t_ms));
}

std::vector<TranscriptRecord> SidecarFileProvider::transcribe(std::string_view wav, std::int64_t chunk_t0_ms,
                                                              const AudioTruth*) {
  auto it = audio_.find(chunk_t0_ms);
  if (it == audio_.end()) {
    throw Error(ErrorCode::provider, "sidecar has no audio entry for t=" + std::to_string(chunk_t0_ms));
  }
  return ReferenceProvider::transcribe(wav, chunk_t0_ms, &it->second);
}

// ---------------------------------------------------------------------------
// Remote provider

RemoteProvider::RemoteProvider(std::string endpoint, int timeout_s)
    : endpoint_(std::move(endpoint)), timeout_s_(timeout_s) {}

Json RemoteProvider::call(const std::string& analyzer, const Json& request) {
  try {
    JsonClient client(endpoint_, timeout_s_);
    return client.post("/" + analyzer, request);
  } catch (const Error& e) {
    throw Error(ErrorCode::provider, "remote " + analyzer + " provider: " + e.what());
  }
}

std::vector<Box> RemoteProvider::detect_faces(const Image& image, std::int64_t t_ms, const ImageTruth*) {
  auto res = call("faces", {{"t_ms", t_ms}, {"image_base64", base64_encode(as_bytes(encode_ppm(image)))}});
  std::vector<Box> out;
  try {
    for (const auto& b : res.at("face_boxes")) out.push_back(box_from_json(b));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::provider, std::string("remote faces provider: ") + e.what());
  }
  return out;
}

ImageAnnotation RemoteProvider::annotate_image(const Image& image, std::int64_t t_ms, const ImageTruth*) {
  auto res = call("labels", {{"t_ms", t_ms}, {"image_base64", base64_encode(as_bytes(encode_ppm(image)))}});
  ImageAnnotation a;
  a.t_ms = t_ms;
  a.image_width = image.width;
  a.image_height = image.height;
  try {
    for (const auto& l : res.value("labels", Json::array())) {
      a.labels.push_back({l.at("label").get<std::string>(), std::clamp(l.at("confidence").get<double>(), 0.0, 1.0)});
    }
    a.texts = res.value("texts", std::vector<std::string>{});
    for (const auto& b : res.value("face_boxes", Json::array())) {
      if (auto c = clip_box(box_from_json(b), image.width, image.height)) a.face_boxes.push_back(*c);
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::provider, std::string("remote labels provider: ") + e.what());
  }
  return a;
}

std::vector<TranscriptRecord> RemoteProvider::transcribe(std::string_view wav, std::int64_t chunk_t0_ms,
                                                         const AudioTruth*) {
  check_wav(wav);
  auto res = call("transcription", {{"t_ms", chunk_t0_ms}, {"audio_base64", base64_encode(as_bytes(wav))}});
  std::vector<TranscriptRecord> out;
  try {
    for (const auto& l : res.at("lines")) {
      out.push_back({chunk_t0_ms + l.at("t_start_ms").get<std::int64_t>(),
                     chunk_t0_ms + l.at("t_end_ms").get<std::int64_t>(),
                     speaker_from_string(l.at("speaker").get<std::string>()), l.at("text").get<std::string>()});
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::provider, std::string("remote transcription provider: ") + e.what());
  }
  return out;
}

SentimentRecord RemoteProvider::analyze_sentiment(std::string_view text, std::int64_t t_ms) {
  auto res = call("sentiment", {{"t_ms", t_ms}, {"text", std::string(text)}});
  Json rec = res;
  rec["type"] = "sentiment";
  rec["t_ms"] = t_ms;
  try {
    return std::get<SentimentRecord>(record_from_json(rec, "sentiment"));
  } catch (const Error& e) {
    throw Error(ErrorCode::provider, std::string("remote sentiment provider: ") + e.what());
  }
}

CognitionRecord RemoteProvider::cognition(const BandPowerRecord& bp, double gsr_norm) {
  auto res = call("cognition", {{"band_power", record_to_json(bp)}, {"gsr_norm", gsr_norm}});
  Json rec = res;
  rec["type"] = "cognition";
  rec["t_ms"] = bp.t_ms;
  try {
    return std::get<CognitionRecord>(record_from_json(rec, "cognition"));
  } catch (const Error& e) {
    throw Error(ErrorCode::provider, std::string("remote cognition provider: ") + e.what());
  }
}

FacialExpressionRecord RemoteProvider::expression(std::span<const EegFrame> frames,
                                                  std::span<const ExpressionCue> cues) {
  Json fr = Json::array();
  for (const auto& f : frames) fr.push_back(record_to_json(f));
  Json cu = Json::array();
  for (const auto& c : cues) cu.push_back(record_to_json(c));
  auto res = call("expression", {{"frames", fr}, {"cues", cu}});
  Json rec = res;
  rec["type"] = "facial_expression";
  if (!rec.contains("t_ms")) rec["t_ms"] = frames.empty() ? 0 : frames.front().t_ms;
  try {
    return std::get<FacialExpressionRecord>(record_from_json(rec, "facial_expression"));
  } catch (const Error& e) {
    throw Error(ErrorCode::provider, std::string("remote expression provider: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

AnalyzerSet make_analyzers(const ProviderConfig& config) {
  auto reference = std::make_shared<ReferenceProvider>();
  std::map<std::string, std::shared_ptr<AnalyzerProvider>> cache;
  auto bind = [&](const ProviderSelection& sel) -> std::shared_ptr<AnalyzerProvider> {
    switch (sel.kind) {
      case ProviderKind::reference:
        return reference;
      case ProviderKind::sidecar: {
        auto& slot = cache["sidecar:" + sel.sidecar_path];
        if (!slot) slot = std::make_shared<SidecarFileProvider>(sel.sidecar_path);
        return slot;
      }
      case ProviderKind::remote: {
        auto& slot = cache["remote:" + sel.endpoint];
        if (!slot) slot = std::make_shared<RemoteProvider>(sel.endpoint);
        return slot;
      }
    }
    return reference;
  };
  return {bind(config.faces),     bind(config.labels),    bind(config.transcription),
          bind(config.sentiment), bind(config.cognition), bind(config.expression)};
}

std::vector<Box> detect_faces(std::string_view image_bytes, AnalyzerProvider& provider, std::int64_t t_ms,
                              const ImageTruth* truth) {
  auto decoded = decode_ppm(image_bytes);
  std::vector<Box> out;
  for (const auto& b : provider.detect_faces(decoded.image, t_ms, truth)) {
    if (auto c = clip_box(b, decoded.image.width, decoded.image.height)) out.push_back(*c);
  }
  return out;
}

ImageAnnotation annotate_image(std::string_view image_bytes, AnalyzerProvider& provider, std::int64_t t_ms,
                               const ImageTruth* truth) {
  auto decoded = decode_ppm(image_bytes);
  return provider.annotate_image(decoded.image, t_ms, truth);
}

std::vector<TranscriptRecord> transcribe(std::string_view wav, AnalyzerProvider& provider, std::int64_t chunk_t0_ms,
                                         const AudioTruth* truth) {
  return provider.transcribe(wav, chunk_t0_ms, truth);
}

}  // namespace fprig
