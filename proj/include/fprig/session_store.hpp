#pragma once

// On-disk session layout:
//
//   <data_dir>/<session_id>/manifest.json
//   <data_dir>/<session_id>/segment_00000.json ...
//   <data_dir>/<session_id>/media/img_<t_ms>.ppm, media/aud_<t_ms>.wav

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "fprig/session_model.hpp"

namespace fprig {

class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path data_dir);

  const std::filesystem::path& data_dir() const { return data_dir_; }
  std::filesystem::path session_dir(const std::string& session_id) const;
  std::filesystem::path segment_path(const std::string& session_id, std::int64_t index) const;
  // Resolves a session-relative media path; rejects paths escaping the session.
  std::filesystem::path media_path(const std::string& session_id, const std::string& relative) const;

  bool exists(const std::string& session_id) const;
  std::vector<std::string> list_sessions() const;

  // Creates the session directory tree; Error(conflict) when it exists.
  void create(const std::string& session_id) const;

  SessionManifest read_manifest(const std::string& session_id) const;  // Error(not_found)
  void write_manifest(const SessionManifest& manifest) const;

  std::string read_segment_bytes(const std::string& session_id, std::int64_t index) const;
  SegmentFile read_segment(const std::string& session_id, std::int64_t index) const;
  void write_segment_bytes(const std::string& session_id, std::int64_t index, std::string_view bytes) const;
  std::int64_t count_segment_files(const std::string& session_id) const;

  std::string read_media(const std::string& session_id, const std::string& relative) const;
  void write_media(const std::string& session_id, const std::string& relative, std::string_view bytes) const;

  static std::string image_media_name(std::int64_t t_ms);
  static std::string audio_media_name(std::int64_t t_ms);

 private:
  std::filesystem::path data_dir_;
};

// Orders records by t_ms, then kind name; stable otherwise.
void sort_timeline(std::vector<Record>& records);

/// Records with t0 <= t_ms < t1 whose kind is in `kinds`, across all sealed
/// segments. Transcripts and DES reports are keyed by their start time.
std::vector<Record> timeline_query(const SessionStore& store, const std::string& session_id,
                                   std::int64_t t0_ms, std::int64_t t1_ms,
                                   const std::set<std::string>& kinds);

}  // namespace fprig
