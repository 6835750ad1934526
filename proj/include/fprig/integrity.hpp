#pragma once

// Tamper-evidence chain. Each sealed segment's SHA-256 is sent to an
// attestation service, which keeps a secret 16-byte nonce per segment and
// answers with SHA-256(hex digest || nonce). That response is written as the
// next segment's prev_attestation, so rewriting any sealed file (or any media
// file it references) breaks the chain for anyone holding the store.

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fprig/crypto.hpp"
#include "fprig/session_model.hpp"
#include "fprig/session_store.hpp"

namespace fprig {

inline constexpr std::size_t kNonceBytes = 16;

std::string hash_segment(std::string_view file_bytes);

// SHA-256 over the ASCII hex digest followed by the raw nonce bytes.
std::string response_digest(std::string_view file_digest_hex, std::span<const std::uint8_t> nonce);

struct Attestation {
  std::string session_id;
  std::int64_t segment_index = 0;
  std::string file_digest;
  Bytes nonce;  // server secret
  std::string response_digest;
  std::int64_t received_epoch_ms = 0;
  bool operator==(const Attestation&) const = default;
};

Json attestation_to_json(const Attestation& a, bool include_nonce);
Attestation attestation_from_json(const Json& value);

/// Append-only attestation store backed by a JSON-lines file. Safe for
/// concurrent use; one writer lock covers append + index update.
class AttestationStore {
 public:
  // Empty path keeps the store in memory only.
  explicit AttestationStore(std::filesystem::path file = {});

  /// First request draws a fresh nonce and persists it. An identical replay
  /// returns the stored response; a different digest for an attested index is
  /// Error(conflict). Malformed digests are Error(validation).
  std::string attest(const std::string& session_id, std::int64_t segment_index, const std::string& file_digest);

  std::optional<Attestation> find(const std::string& session_id, std::int64_t segment_index) const;
  std::vector<Attestation> list(const std::string& session_id) const;

 private:
  std::filesystem::path file_;
  mutable std::mutex mu_;
  std::map<std::pair<std::string, std::int64_t>, Attestation> index_;
};

// Client side of attestation: never sees nonces.
class Attestor {
 public:
  virtual ~Attestor() = default;
  // Error(transport) when the service is unreachable.
  virtual std::string attest(const std::string& session_id, std::int64_t segment_index,
                             const std::string& file_digest) = 0;
};

class LocalAttestor : public Attestor {
 public:
  explicit LocalAttestor(AttestationStore& store) : store_(store) {}
  std::string attest(const std::string& session_id, std::int64_t segment_index,
                     const std::string& file_digest) override {
    return store_.attest(session_id, segment_index, file_digest);
  }

 private:
  AttestationStore& store_;
};

// POST {url}/attest
class HttpAttestor : public Attestor {
 public:
  explicit HttpAttestor(std::string url, int timeout_s = 5) : url_(std::move(url)), timeout_s_(timeout_s) {}
  std::string attest(const std::string& session_id, std::int64_t segment_index,
                     const std::string& file_digest) override;

 private:
  std::string url_;
  int timeout_s_;
};

enum class Verdict { intact, tampered, gapped };
std::string_view to_string(Verdict v);

struct SegmentCheck {
  std::int64_t index = 0;
  std::string file_digest;
  bool attested = false;
  bool digest_ok = false;   // matches the attested digest
  bool link_ok = false;     // prev_attestation matches the chain
  bool media_ok = false;    // every MediaRef digest matches its file
  bool pending_link = false;
  std::string detail;
};

struct ChainReport {
  Verdict verdict = Verdict::intact;
  std::optional<std::int64_t> first_bad_index;
  std::vector<SegmentCheck> segments;
};

Json chain_report_to_json(const ChainReport& report);

/// Recomputes every segment and media digest, checks them against the
/// attestation store, and walks the prev_attestation links from genesis.
/// Missing attestations or PENDING links give `gapped`; any mismatch gives
/// `tampered` at the smallest failing segment index.
ChainReport verify_chain(const SessionStore& store, const std::string& session_id,
                         const AttestationStore& attestations);

}  // namespace fprig
