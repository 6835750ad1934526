#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "fprig/file_util.hpp"
#include "fprig/integrity.hpp"
#include "support.hpp"

using namespace fprig;
using fprig::testing::TempDir;

namespace {

const std::string kDigestA(64, 'a');
const std::string kDigestB(64, 'b');

Scenario small_session(const std::string& id, std::int64_t seconds, std::uint64_t seed) {
  Scenario sc;
  sc.config.session_id = id;
  sc.config.segment_duration_ms = 1000;
  sc.config.des_interval_min_s = 1;
  sc.config.des_interval_max_s = 3;
  sc.config.rng_seed = seed;
  sc.rng_seed = seed;
  sc.duration_ms = seconds * 1000;
  sc.noise_amplitude = 30;
  sc.eeg_tones.push_back({{}, 10.0, 500.0, 0, sc.duration_ms});
  sc.image_script.push_back({0, "room", {{20, 20, 40, 40}}, {}, {"Person"}});
  sc.audio_chunk_ms = 1000;
  sc.speech_script.push_back({200, 0, Speaker::wearer, "start ziggy ok end ziggy"});
  return sc;
}

void flip_byte(const std::filesystem::path& p, std::size_t offset, std::uint8_t mask) {
  auto bytes = read_file(p);
  bytes[offset % bytes.size()] = static_cast<char>(bytes[offset % bytes.size()] ^ mask);
  std::ofstream(p, std::ios::binary | std::ios::trunc) << bytes;
}

}  // namespace

TEST(Hash, EmptyInput) {
  EXPECT_EQ(hash_segment(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(hash_segment("x"), hash_segment("x"));
  EXPECT_NE(hash_segment("x"), hash_segment("y"));
}

TEST(Hex, RoundTrip) {
  Bytes b{0, 1, 0xab, 0xff};
  EXPECT_EQ(to_hex(b), "0001abff");
  EXPECT_EQ(from_hex("0001abff"), b);
  EXPECT_THROW(from_hex("0g"), Error);
  EXPECT_EQ(base64_decode(base64_encode(b)), b);
  EXPECT_EQ(base64_encode(as_bytes("hello")), "aGVsbG8=");
}

TEST(Attest, FirstReplayAndConflict) {
  AttestationStore store;
  auto r = store.attest("s", 0, kDigestA);
  EXPECT_TRUE(is_lower_hex64(r));
  EXPECT_EQ(store.attest("s", 0, kDigestA), r);
  auto rec = store.find("s", 0);
  ASSERT_TRUE(rec);
  EXPECT_EQ(rec->nonce.size(), kNonceBytes);
  EXPECT_EQ(response_digest(kDigestA, rec->nonce), r);
  try {
    store.attest("s", 0, kDigestB);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::conflict);
  }
  try {
    store.attest("s", 1, "ABC");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::validation);
  }
}

TEST(Attest, NoncesDifferPerSegment) {
  AttestationStore store;
  EXPECT_NE(store.attest("s", 0, kDigestA), store.attest("s", 1, kDigestA));
}

TEST(Attest, PersistsAcrossReopen) {
  TempDir dir;
  auto file = dir.path() / "att.jsonl";
  std::string r;
  {
    AttestationStore store(file);
    r = store.attest("s", 0, kDigestA);
    store.attest("s", 1, kDigestB);
  }
  AttestationStore again(file);
  EXPECT_EQ(again.attest("s", 0, kDigestA), r);
  EXPECT_EQ(again.list("s").size(), 2u);
  auto j = attestation_to_json(*again.find("s", 0), false);
  EXPECT_FALSE(j.contains("nonce"));
  EXPECT_EQ(attestation_from_json(attestation_to_json(*again.find("s", 0), true)), *again.find("s", 0));
}

class ChainTest : public ::testing::Test {
 protected:
  TempDir dir;
  SessionStore store{dir.path()};
  AttestationStore attestations;
  LocalAttestor attestor{attestations};
  IngestService service{store, attestor};
};

TEST_F(ChainTest, IntactFiveSegments) {
  auto m = fprig::testing::record_scenario(service, small_session("five", 5, 1));
  EXPECT_EQ(m.segment_count, 5);
  EXPECT_TRUE(m.final_attestation.has_value());
  auto r = verify_chain(store, "five", attestations);
  EXPECT_EQ(r.verdict, Verdict::intact);
  EXPECT_FALSE(r.first_bad_index);
  ASSERT_EQ(r.segments.size(), 5u);
  for (const auto& s : r.segments) EXPECT_TRUE(s.attested && s.digest_ok && s.link_ok && s.media_ok);
}

TEST_F(ChainTest, FlippedSegmentByte) {
  fprig::testing::record_scenario(service, small_session("flip", 5, 2));
  flip_byte(store.segment_path("flip", 2), 100, 0x01);
  auto r = verify_chain(store, "flip", attestations);
  EXPECT_EQ(r.verdict, Verdict::tampered);
  EXPECT_EQ(r.first_bad_index, 2);
}

TEST_F(ChainTest, FlippedImageByte) {
  fprig::testing::record_scenario(service, small_session("img", 5, 3));
  auto seg = store.read_segment("img", 3);
  std::string path;
  for (const auto& rec : seg.records)
    if (auto m = std::get_if<MediaRef>(&rec); m && m->kind == MediaKind::image) path = m->path;
  ASSERT_FALSE(path.empty());
  flip_byte(store.media_path("img", path), 5000, 0x80);
  auto r = verify_chain(store, "img", attestations);
  EXPECT_EQ(r.verdict, Verdict::tampered);
  EXPECT_EQ(r.first_bad_index, 3);
  EXPECT_FALSE(r.segments[3].media_ok);
}

TEST_F(ChainTest, MissingSegmentFile) {
  fprig::testing::record_scenario(service, small_session("gone", 4, 3));
  std::filesystem::remove(store.segment_path("gone", 1));
  auto r = verify_chain(store, "gone", attestations);
  EXPECT_EQ(r.verdict, Verdict::tampered);
  EXPECT_EQ(r.first_bad_index, 1);
}

TEST_F(ChainTest, MissingAttestationIsGapped) {
  fprig::testing::record_scenario(service, small_session("gap", 3, 4));
  AttestationStore empty;
  auto r = verify_chain(store, "gap", empty);
  EXPECT_EQ(r.verdict, Verdict::gapped);
  EXPECT_FALSE(r.first_bad_index);
}

TEST_F(ChainTest, ReportJson) {
  fprig::testing::record_scenario(service, small_session("json", 3, 5));
  auto j = chain_report_to_json(verify_chain(store, "json", attestations));
  EXPECT_EQ(j.at("verdict"), "intact");
  EXPECT_TRUE(j.at("first_bad_index").is_null());
  EXPECT_EQ(j.at("segments").size(), 3u);
}

// Attestation outage: the next segment links PENDING, the manifest flags the
// gap, and the verifier reports gapped rather than tampered.
TEST(ChainOutage, PendingLinkAndRetry) {
  TempDir dir;
  SessionStore store(dir.path());
  AttestationStore attestations;
  LocalAttestor local(attestations);
  struct Switchable : Attestor {
    LocalAttestor& inner;
    bool down = false;
    explicit Switchable(LocalAttestor& a) : inner(a) {}
    std::string attest(const std::string& s, std::int64_t i, const std::string& d) override {
      if (down) throw Error(ErrorCode::transport, "down");
      return inner.attest(s, i, d);
    }
  } attestor(local);
  IngestService service(store, attestor);

  auto sc = small_session("outage", 3, 6);
  service.start_session(sc.config);
  service.ingest_batch(build_envelopes(sc, 0, 1000));
  attestor.down = true;
  service.ingest_batch(build_envelopes(sc, 1000, 2000));  // seals segment 0 unattested
  attestor.down = false;
  service.ingest_batch(build_envelopes(sc, 2000, 3000));  // seals segment 1
  auto m = service.stop_session("outage");

  EXPECT_EQ(m.segment_count, 3);
  EXPECT_EQ(m.chain_gaps, std::vector<std::int64_t>{0});
  EXPECT_EQ(store.read_segment("outage", 1).prev_attestation, kPendingAttestation);
  auto r = verify_chain(store, "outage", attestations);
  EXPECT_EQ(r.verdict, Verdict::gapped);
  EXPECT_TRUE(r.segments[1].pending_link);
}

// Chain soundness over many generated sessions: intact before mutation,
// tampered at or before the mutated segment after one byte flip.
TEST(ChainSoundness, HundredSessions) {
  const auto t0 = std::chrono::steady_clock::now();
  TempDir dir;
  SessionStore store(dir.path());
  AttestationStore attestations;
  LocalAttestor attestor(attestations);
  IngestService service(store, attestor);
  std::mt19937_64 rng(2024);
  int detected = 0;
  for (int i = 0; i < 100; ++i) {
    const auto nseg = 3 + static_cast<std::int64_t>(rng() % 6);
    const std::string id = "chain-" + std::to_string(i);
    auto m = fprig::testing::record_scenario(service, small_session(id, nseg, rng()));
    ASSERT_EQ(m.segment_count, nseg);
    ASSERT_EQ(verify_chain(store, id, attestations).verdict, Verdict::intact) << id;

    std::int64_t mutated = 0;
    const auto mask = static_cast<std::uint8_t>(1 + rng() % 255);
    if (rng() % 2 == 0) {
      mutated = static_cast<std::int64_t>(rng() % nseg);
      flip_byte(store.segment_path(id, mutated), rng(), mask);
    } else {
      std::vector<std::pair<std::int64_t, std::string>> media;
      for (std::int64_t k = 0; k < nseg; ++k) {
        for (const auto& rec : store.read_segment(id, k).records) {
          if (auto mr = std::get_if<MediaRef>(&rec)) media.emplace_back(k, mr->path);
        }
      }
      ASSERT_FALSE(media.empty());
      const auto& [k, path] = media[rng() % media.size()];
      mutated = k;
      flip_byte(store.media_path(id, path), rng(), mask);
    }
    auto r = verify_chain(store, id, attestations);
    if (r.verdict == Verdict::tampered && r.first_bad_index && *r.first_bad_index <= mutated) ++detected;
  }
  EXPECT_EQ(detected, 100);
  EXPECT_LT(fprig::testing::elapsed_s(t0), 60.0);
}
