#include "fprig/sidecar.hpp"

#include "fprig/error.hpp"

namespace fprig {

namespace {

template <typename T>
T get_or(const Json& obj, const char* key, T fallback) {
  auto it = obj.find(key);
  return it == obj.end() ? fallback : it->template get<T>();
}

}  // namespace

Json box_to_json(const Box& b) { return {{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}}; }

Box box_from_json(const Json& v) {
  if (v.is_array() && v.size() == 4) return {v[0].get<int>(), v[1].get<int>(), v[2].get<int>(), v[3].get<int>()};
  if (!v.is_object()) throw Error(ErrorCode::validation, "box: expected object or [x,y,w,h]", "box");
  return {v.at("x").get<int>(), v.at("y").get<int>(), v.at("w").get<int>(), v.at("h").get<int>()};
}

Json image_truth_to_json(const ImageTruth& t) {
  Json boxes = Json::array();
  for (const auto& b : t.face_boxes) boxes.push_back(box_to_json(b));
  return {{"face_boxes", boxes}, {"labels", t.labels}, {"texts", t.texts}};
}

ImageTruth image_truth_from_json(const Json& v) {
  try {
    ImageTruth t;
    if (auto it = v.find("face_boxes"); it != v.end()) {
      for (const auto& b : *it) t.face_boxes.push_back(box_from_json(b));
    }
    t.labels = get_or(v, "labels", std::vector<std::string>{});
    t.texts = get_or(v, "texts", std::vector<std::string>{});
    return t;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::validation, std::string("image sidecar: ") + e.what(), "sidecar");
  }
}

Json audio_truth_to_json(const AudioTruth& t) {
  Json lines = Json::array();
  for (const auto& l : t.lines) {
    lines.push_back({{"t_start_ms", l.t_start_ms},
                     {"t_end_ms", l.t_end_ms},
                     {"speaker", to_string(l.speaker)},
                     {"text", l.text}});
  }
  return {{"lines", lines}};
}

AudioTruth audio_truth_from_json(const Json& v) {
  try {
    AudioTruth t;
    if (auto it = v.find("lines"); it != v.end()) {
      for (const auto& l : *it) {
        t.lines.push_back({l.at("t_start_ms").get<std::int64_t>(), l.at("t_end_ms").get<std::int64_t>(),
                           speaker_from_string(l.at("speaker").get<std::string>()),
                           l.at("text").get<std::string>()});
      }
    }
    return t;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::validation, std::string("audio sidecar: ") + e.what(), "sidecar");
  }
}

}  // namespace fprig
