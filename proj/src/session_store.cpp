#include "fprig/session_store.hpp"

#include <algorithm>
#include <cstdio>

#include "fprig/error.hpp"
#include "fprig/file_util.hpp"

namespace fs = std::filesystem;

namespace fprig {

SessionStore::SessionStore(fs::path data_dir) : data_dir_(std::move(data_dir)) {
  fs::create_directories(data_dir_);
}

fs::path SessionStore::session_dir(const std::string& session_id) const { return data_dir_ / session_id; }

fs::path SessionStore::segment_path(const std::string& session_id, std::int64_t index) const {
  char name[32];
  std::snprintf(name, sizeof name, "segment_%05lld.json", static_cast<long long>(index));
  return session_dir(session_id) / name;
}

fs::path SessionStore::media_path(const std::string& session_id, const std::string& relative) const {
  fs::path rel(relative);
  if (relative.empty() || rel.is_absolute()) {
    throw Error(ErrorCode::validation, "media path must be relative", "path");
  }
  for (const auto& part : rel) {
    if (part == "..") throw Error(ErrorCode::validation, "media path escapes session directory", "path");
  }
  return session_dir(session_id) / rel;
}

bool SessionStore::exists(const std::string& session_id) const {
  return fs::exists(session_dir(session_id) / "manifest.json");
}

std::vector<std::string> SessionStore::list_sessions() const {
  std::vector<std::string> out;
  for (const auto& entry : fs::directory_iterator(data_dir_)) {
    if (entry.is_directory() && fs::exists(entry.path() / "manifest.json")) {
      out.push_back(entry.path().filename().string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

void SessionStore::create(const std::string& session_id) const {
  auto dir = session_dir(session_id);
  if (fs::exists(dir)) throw Error(ErrorCode::conflict, "session already exists: " + session_id, "session_id");
  fs::create_directories(dir / "media");
}

SessionManifest SessionStore::read_manifest(const std::string& session_id) const {
  auto path = session_dir(session_id) / "manifest.json";
  if (!fs::exists(path)) throw Error(ErrorCode::not_found, "unknown session: " + session_id);
  return manifest_from_json(Json::parse(read_file(path)));
}

void SessionStore::write_manifest(const SessionManifest& manifest) const {
  write_file_atomic(session_dir(manifest.session_id) / "manifest.json",
                    canonical_dump(manifest_to_json(manifest)));
}

std::string SessionStore::read_segment_bytes(const std::string& session_id, std::int64_t index) const {
  return read_file(segment_path(session_id, index));
}

SegmentFile SessionStore::read_segment(const std::string& session_id, std::int64_t index) const {
  return parse_segment(read_segment_bytes(session_id, index));
}

void SessionStore::write_segment_bytes(const std::string& session_id, std::int64_t index,
                                       std::string_view bytes) const {
  write_file_atomic(segment_path(session_id, index), bytes);
}

std::int64_t SessionStore::count_segment_files(const std::string& session_id) const {
  std::int64_t n = 0;
  for (const auto& entry : fs::directory_iterator(session_dir(session_id))) {
    auto name = entry.path().filename().string();
    if (name.rfind("segment_", 0) == 0 && entry.path().extension() == ".json") ++n;
  }
  return n;
}

std::string SessionStore::read_media(const std::string& session_id, const std::string& relative) const {
  return read_file(media_path(session_id, relative));
}

void SessionStore::write_media(const std::string& session_id, const std::string& relative,
                               std::string_view bytes) const {
  write_file_atomic(media_path(session_id, relative), bytes);
}

std::string SessionStore::image_media_name(std::int64_t t_ms) {
  return "media/img_" + std::to_string(t_ms) + ".ppm";
}

std::string SessionStore::audio_media_name(std::int64_t t_ms) {
  return "media/aud_" + std::to_string(t_ms) + ".wav";
}

void sort_timeline(std::vector<Record>& records) {
  std::stable_sort(records.begin(), records.end(), [](const Record& a, const Record& b) {
    auto ta = record_time(a);
    auto tb = record_time(b);
    if (ta != tb) return ta < tb;
    return record_kind(a) < record_kind(b);
  });
}

std::vector<Record> timeline_query(const SessionStore& store, const std::string& session_id,
                                   std::int64_t t0_ms, std::int64_t t1_ms,
                                   const std::set<std::string>& kinds) {
  if (t0_ms > t1_ms) throw Error(ErrorCode::validation, "t0 must be <= t1", "t0");
  auto manifest = store.read_manifest(session_id);
  std::vector<Record> out;
  if (t0_ms == t1_ms) return out;
  for (std::int64_t i = 0; i < manifest.segment_count; ++i) {
    auto segment = store.read_segment(session_id, i);
    for (auto& r : segment.records) {
      auto t = record_time(r);
      if (t >= t0_ms && t < t1_ms && kinds.contains(std::string(record_kind(r)))) {
        out.push_back(std::move(r));
      }
    }
  }
  sort_timeline(out);
  return out;
}

}  // namespace fprig
