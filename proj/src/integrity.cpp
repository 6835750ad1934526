#include "fprig/integrity.hpp"

#include <chrono>
#include <fstream>

#include "fprig/error.hpp"
#include "fprig/file_util.hpp"
#include "fprig/http_util.hpp"

namespace fprig {

namespace {

std::int64_t now_epoch_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

}  // namespace

std::string hash_segment(std::string_view file_bytes) { return sha256_hex(file_bytes); }

std::string response_digest(std::string_view file_digest_hex, std::span<const std::uint8_t> nonce) {
  Bytes preimage(file_digest_hex.begin(), file_digest_hex.end());
  preimage.insert(preimage.end(), nonce.begin(), nonce.end());
  return sha256_hex(preimage);
}

Json attestation_to_json(const Attestation& a, bool include_nonce) {
  Json j{{"session_id", a.session_id},
         {"segment_index", a.segment_index},
         {"file_digest", a.file_digest},
         {"response_digest", a.response_digest},
         {"received_epoch_ms", a.received_epoch_ms}};
  if (include_nonce) j["nonce"] = to_hex(a.nonce);
  return j;
}

Attestation attestation_from_json(const Json& v) {
  try {
    Attestation a;
    a.session_id = v.at("session_id").get<std::string>();
    a.segment_index = v.at("segment_index").get<std::int64_t>();
    a.file_digest = v.at("file_digest").get<std::string>();
    a.response_digest = v.at("response_digest").get<std::string>();
    a.received_epoch_ms = v.at("received_epoch_ms").get<std::int64_t>();
    if (v.contains("nonce")) a.nonce = from_hex(v.at("nonce").get<std::string>());
    return a;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::parse, std::string("attestation record: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

AttestationStore::AttestationStore(std::filesystem::path file) : file_(std::move(file)) {
  if (file_.empty()) return;
  if (file_.has_parent_path()) std::filesystem::create_directories(file_.parent_path());
  std::ifstream in(file_);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error&) {
      // A torn final line from a crash mid-append; earlier lines are intact.
      continue;
    }
    auto a = attestation_from_json(j);
    index_.try_emplace({a.session_id, a.segment_index}, std::move(a));
  }
}

std::string AttestationStore::attest(const std::string& session_id, std::int64_t segment_index,
                                     const std::string& file_digest) {
  if (!is_lower_hex64(file_digest)) {
    throw Error(ErrorCode::validation, "file_digest must be 64 lowercase hex chars", "file_digest");
  }
  if (session_id.empty()) throw Error(ErrorCode::validation, "session_id required", "session_id");
  if (segment_index < 0) throw Error(ErrorCode::validation, "segment_index must be >= 0", "segment_index");

  std::lock_guard lock(mu_);
  auto key = std::make_pair(session_id, segment_index);
  if (auto it = index_.find(key); it != index_.end()) {
    if (it->second.file_digest != file_digest) {
      throw Error(ErrorCode::conflict,
                  "segment " + std::to_string(segment_index) + " of " + session_id + " already attested with a different digest",
                  "file_digest");
    }
    return it->second.response_digest;
  }
  Attestation a;
  a.session_id = session_id;
  a.segment_index = segment_index;
  a.file_digest = file_digest;
  a.nonce = random_bytes(kNonceBytes);
  a.response_digest = response_digest(file_digest, a.nonce);
  a.received_epoch_ms = now_epoch_ms();
  if (!file_.empty()) {
    std::ofstream out(file_, std::ios::app);
    out << canonical_dump(attestation_to_json(a, true)) << '\n';
    out.flush();
    if (!out) throw Error(ErrorCode::io, "cannot append to attestation store " + file_.string());
  }
  auto response = a.response_digest;
  index_.emplace(key, std::move(a));
  return response;
}

std::optional<Attestation> AttestationStore::find(const std::string& session_id, std::int64_t segment_index) const {
  std::lock_guard lock(mu_);
  auto it = index_.find({session_id, segment_index});
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<Attestation> AttestationStore::list(const std::string& session_id) const {
  std::lock_guard lock(mu_);
  std::vector<Attestation> out;
  for (auto it = index_.lower_bound({session_id, INT64_MIN}); it != index_.end() && it->first.first == session_id;
       ++it) {
    out.push_back(it->second);
  }
  return out;
}

std::string HttpAttestor::attest(const std::string& session_id, std::int64_t segment_index,
                                 const std::string& file_digest) {
  JsonClient client(url_, timeout_s_);
  auto res = client.post("/attest", {{"session_id", session_id},
                                     {"segment_index", segment_index},
                                     {"file_digest", file_digest}});
  auto digest = res.value("response_digest", std::string{});
  if (!is_lower_hex64(digest)) throw Error(ErrorCode::transport, "attestation service returned a malformed digest");
  return digest;
}

// ---------------------------------------------------------------------------

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::intact: return "intact";
    case Verdict::tampered: return "tampered";
    case Verdict::gapped: return "gapped";
  }
  return "";
}

Json chain_report_to_json(const ChainReport& report) {
  Json segments = Json::array();
  for (const auto& s : report.segments) {
    segments.push_back({{"index", s.index},
                        {"file_digest", s.file_digest},
                        {"attested", s.attested},
                        {"digest_ok", s.digest_ok},
                        {"link_ok", s.link_ok},
                        {"media_ok", s.media_ok},
                        {"pending_link", s.pending_link},
                        {"detail", s.detail}});
  }
  Json j{{"verdict", to_string(report.verdict)}, {"segments", segments}};
  j["first_bad_index"] = report.first_bad_index ? Json(*report.first_bad_index) : Json(nullptr);
  return j;
}

ChainReport verify_chain(const SessionStore& store, const std::string& session_id,
                         const AttestationStore& attestations) {
  auto manifest = store.read_manifest(session_id);
  ChainReport report;
  bool gapped = false;
  auto mark_bad = [&](SegmentCheck& check, std::int64_t index, const std::string& why) {
    if (!check.detail.empty()) check.detail += "; ";
    check.detail += why;
    if (!report.first_bad_index || index < *report.first_bad_index) report.first_bad_index = index;
  };

  const auto on_disk = store.count_segment_files(session_id);
  std::optional<std::string> expected_prev = std::string(kGenesisAttestation);

  for (std::int64_t i = 0; i < std::max(manifest.segment_count, on_disk); ++i) {
    SegmentCheck check;
    check.index = i;
    std::string bytes;
    try {
      bytes = store.read_segment_bytes(session_id, i);
    } catch (const Error&) {
      mark_bad(check, i, "segment file missing");
      report.segments.push_back(std::move(check));
      expected_prev.reset();
      continue;
    }
    if (i >= manifest.segment_count) mark_bad(check, i, "segment not listed in manifest");
    check.file_digest = hash_segment(bytes);

    auto att = attestations.find(session_id, i);
    check.attested = att.has_value();
    if (!att) {
      gapped = true;
      check.detail = "no attestation";
    } else {
      check.digest_ok = att->file_digest == check.file_digest;
      if (!check.digest_ok) mark_bad(check, i, "file digest differs from attested digest");
      if (response_digest(att->file_digest, att->nonce) != att->response_digest) {
        mark_bad(check, i, "attestation record inconsistent");
      }
    }

    std::optional<SegmentFile> segment;
    try {
      segment = parse_segment(bytes);
    } catch (const Error& e) {
      mark_bad(check, i, std::string("unparseable segment: ") + e.what());
    }

    if (segment) {
      if (segment->session_id != session_id || segment->segment_index != i) {
        mark_bad(check, i, "segment identity mismatch");
      }
      if (segment->prev_attestation == kPendingAttestation && i > 0) {
        check.pending_link = true;
        gapped = true;
      } else if (expected_prev) {
        check.link_ok = segment->prev_attestation == *expected_prev;
        if (!check.link_ok) mark_bad(check, i, "prev_attestation breaks the chain");
      } else {
        gapped = true;  // predecessor unattested; link cannot be checked
      }
      check.media_ok = true;
      for (const auto& r : segment->records) {
        const auto* media = std::get_if<MediaRef>(&r);
        if (media == nullptr) continue;
        try {
          if (sha256_hex(store.read_media(session_id, media->path)) != media->digest) {
            check.media_ok = false;
            mark_bad(check, i, "media digest mismatch: " + media->path);
          }
        } catch (const Error&) {
          check.media_ok = false;
          mark_bad(check, i, "media file missing: " + media->path);
        }
      }
    }

    if (att) expected_prev = att->response_digest;
    else expected_prev.reset();
    report.segments.push_back(std::move(check));
  }

  if (manifest.segment_count > 0 && manifest.status == SessionStatus::sealed) {
    const auto last = manifest.segment_count - 1;
    if (!manifest.final_attestation || *manifest.final_attestation == kPendingAttestation) {
      gapped = true;
    } else if (expected_prev && *manifest.final_attestation != *expected_prev) {
      mark_bad(report.segments[static_cast<std::size_t>(last)], last, "final attestation mismatch");
    }
  }
  if (manifest.status != SessionStatus::sealed) gapped = true;

  if (report.first_bad_index) report.verdict = Verdict::tampered;
  else if (gapped) report.verdict = Verdict::gapped;
  else report.verdict = Verdict::intact;
  return report;
}

}  // namespace fprig
