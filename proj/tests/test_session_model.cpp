#include <gtest/gtest.h>

#include <random>

#include "fprig/error.hpp"
#include "fprig/session_model.hpp"
#include "fprig/session_store.hpp"

using namespace fprig;

namespace {

SegmentFile base_segment() {
  SegmentFile s;
  s.session_id = "s1";
  s.segment_index = 0;
  s.start_ms = 0;
  s.end_ms = 60000;
  return s;
}

std::string hex64(std::mt19937_64& rng) {
  static const char* digits = "0123456789abcdef";
  std::string s(64, '0');
  for (auto& c : s) c = digits[rng() % 16];
  return s;
}

// One record of every kind, with randomized contents, at time t.
Record random_record(std::mt19937_64& rng, std::size_t kind, std::int64_t t) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto word = [&] { return std::string(1 + rng() % 6, static_cast<char>('a' + rng() % 26)); };
  switch (kind % 12) {
    case 0: {
      EegFrame f{t, {}, static_cast<std::int64_t>(rng() % 1000 + 1)};
      for (std::size_t c = 0; c < kEegChannels; ++c) f.channels.push_back(static_cast<std::int16_t>(rng()));
      return f;
    }
    case 1: return GsrSample{t, unit(rng) * 10.0, static_cast<std::int64_t>(rng() % 100 + 1)};
    case 2: {
      MediaRef m{t, MediaKind::audio, "media/aud_" + std::to_string(t) + ".wav", hex64(rng), 5000, 3};
      if (rng() % 2) {
        m.kind = MediaKind::image;
        m.path = "media/img_" + std::to_string(t) + ".ppm";
        m.duration_ms.reset();
      }
      return m;
    }
    case 3: return ExpressionCue{t, EyeAction::wink_left, UpperFace::furrow_brow, LowerFace::clench, unit(rng), 2};
    case 4: {
      BandPowerRecord b{t, {}, {}};
      for (std::size_t c = 0; c < kEegChannels; ++c) {
        BandArray a;
        for (auto& v : a) v = unit(rng) * 1e5;
        b.per_channel.push_back(a);
      }
      for (std::size_t k = 0; k < kBandCount; ++k) {
        double s = 0;
        for (const auto& a : b.per_channel) s += a[k];
        b.avg[k] = s / static_cast<double>(kEegChannels);
      }
      return b;
    }
    case 5: return CognitionRecord{t, unit(rng), unit(rng), unit(rng), unit(rng), unit(rng), unit(rng)};
    case 6: return FacialExpressionRecord{t, EyeAction::blink, UpperFace::raise_brow, LowerFace::smile, unit(rng)};
    case 7: return TranscriptRecord{t, t + 900, rng() % 2 ? Speaker::wearer : Speaker::other, word() + " \"q\" \\ é " + word()};
    case 8: {
      const double p = 1.0 + static_cast<double>(rng() % 5), n = 1.0 + static_cast<double>(rng() % 5);
      return SentimentRecord{t, SentimentLabel::mixed, {p / (2 * (p + n)), n / (2 * (p + n)), 0.5, 0.0}};
    }
    case 9: return DesReport{t, t + 1234, word() + " " + word(), rng() % 2 == 0};
    case 10: return DesTone{t};
    default: {
      ImageAnnotation a{t, 320, 240, {{"Person", 1.0}, {word(), unit(rng)}}, {"EXIT"}, {{1, 2, 30, 40}}};
      return a;
    }
  }
}

}  // namespace

TEST(Segment, EmptyRoundTrip) {
  auto s = base_segment();
  EXPECT_EQ(parse_segment(serialize_segment(s)), s);
}

TEST(Segment, EqualSegmentsSerializeIdentically) {
  auto a = base_segment();
  auto b = base_segment();
  a.records.push_back(GsrSample{0, 2.0, 1});
  b.records.push_back(GsrSample{0, 2.0, 1});
  EXPECT_EQ(serialize_segment(a), serialize_segment(b));
}

TEST(Segment, OutOfOrderRecordsNameTMs) {
  auto s = base_segment();
  s.records.push_back(GsrSample{2000, 2.0, 2});
  s.records.push_back(GsrSample{1000, 2.0, 1});
  try {
    serialize_segment(s);
    FAIL() << "expected validation error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::validation);
    EXPECT_NE(e.field().find("t_ms"), std::string::npos);
  }
}

TEST(Segment, TruncatedBytesAreParseError) {
  auto s = base_segment();
  s.records.push_back(GsrSample{0, 2.0, 1});
  auto bytes = serialize_segment(s);
  try {
    parse_segment(bytes.substr(0, bytes.size() / 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::parse);
    EXPECT_NE(std::string(e.what()).find("byte"), std::string::npos);
  }
}

TEST(Segment, MissingPrevAttestationNamesField) {
  auto j = Json::parse(serialize_segment(base_segment()));
  j.erase("prev_attestation");
  try {
    parse_segment(j.dump());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::validation);
    EXPECT_NE(e.field().find("prev_attestation"), std::string::npos);
  }
}

TEST(Segment, UnknownFieldRejected) {
  auto j = Json::parse(serialize_segment(base_segment()));
  j["extra"] = 1;
  EXPECT_THROW(parse_segment(j.dump()), Error);
}

TEST(Segment, ValidationExamples) {
  auto s = base_segment();
  EXPECT_TRUE(validate_segment(s).empty());

  s.records.push_back(EegFrame{0, std::vector<std::int16_t>(13, 0), 1});
  auto v = validate_segment(s);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_NE(v[0].field.find("channels"), std::string::npos);
  EXPECT_EQ(v[0].rule, "expected 14");

  s.records = {SentimentRecord{0, SentimentLabel::positive, {0.8, 0.0, 0.0, 0.0}}};
  v = validate_segment(s);
  ASSERT_FALSE(v.empty());
  EXPECT_NE(v[0].field.find("scores"), std::string::npos);
}

TEST(Segment, PrevAttestationRules) {
  auto s = base_segment();
  s.prev_attestation = "PENDING";
  EXPECT_FALSE(validate_segment(s).empty());  // segment 0 must carry genesis
  s.segment_index = 1;
  EXPECT_TRUE(validate_segment(s).empty());
  s.prev_attestation = "xyz";
  EXPECT_FALSE(validate_segment(s).empty());
}

TEST(Segment, CanonicalBytesHaveSortedKeysAndNoWhitespace) {
  auto s = base_segment();
  s.records.push_back(GsrSample{0, 0.1, 1});
  auto bytes = serialize_segment(s);
  EXPECT_EQ(bytes.find(' '), std::string::npos);
  EXPECT_EQ(bytes.find('\n'), std::string::npos);
  EXPECT_LT(bytes.find("\"end_ms\""), bytes.find("\"prev_attestation\""));
  EXPECT_LT(bytes.find("\"prev_attestation\""), bytes.find("\"records\""));
  EXPECT_NE(bytes.find("0.1"), std::string::npos);
}

// Property: any valid segment survives serialize -> parse, and re-serializing
// gives the same bytes.
TEST(Segment, RandomRoundTripProperty) {
  std::mt19937_64 rng(1234);
  for (int trial = 0; trial < 200; ++trial) {
    SegmentFile s = base_segment();
    s.segment_index = static_cast<std::int64_t>(rng() % 5);
    if (s.segment_index > 0) s.prev_attestation = rng() % 4 ? hex64(rng) : std::string(kPendingAttestation);
    s.start_ms = s.segment_index * 60000;
    s.end_ms = s.start_ms + 60000;
    const auto n = rng() % 40;
    for (std::size_t i = 0; i < n; ++i) {
      s.records.push_back(random_record(rng, rng(), s.start_ms + static_cast<std::int64_t>(rng() % 60000)));
    }
    sort_timeline(s.records);
    auto bytes = serialize_segment(s);
    auto back = parse_segment(bytes);
    ASSERT_EQ(back, s) << "trial " << trial;
    ASSERT_EQ(serialize_segment(back), bytes);
  }
}

TEST(Config, DesIntervalOrder) {
  SessionConfig c;
  c.session_id = "x";
  EXPECT_TRUE(validate_config(c).empty());
  c.des_interval_min_s = 100;
  c.des_interval_max_s = 10;
  auto v = validate_config(c);
  ASSERT_FALSE(v.empty());
  EXPECT_EQ(v[0].field, "des_interval_min_s");
}

TEST(Config, JsonRoundTrip) {
  SessionConfig c;
  c.session_id = "abc";
  c.providers.labels = {ProviderKind::remote, "http://127.0.0.1:9", ""};
  c.rng_seed = 99;
  EXPECT_EQ(config_from_json(config_to_json(c)), c);
}

TEST(Manifest, JsonRoundTrip) {
  SessionManifest m;
  m.session_id = "abc";
  m.config.session_id = "abc";
  m.segment_count = 3;
  m.chain_gaps = {1};
  m.unattested_segments = {1};
  m.final_attestation = std::string(64, 'a');
  m.record_counts = {{"gsr", 3}};
  m.status = SessionStatus::sealed;
  EXPECT_EQ(manifest_from_json(manifest_to_json(m)), m);
}

TEST(Kinds, Parse) {
  EXPECT_EQ(parse_kinds("des"), std::set<std::string>{"des_report"});
  EXPECT_EQ(parse_kinds("").size(), all_record_kinds().size());
  EXPECT_EQ(parse_kinds("gsr,eeg"), (std::set<std::string>{"gsr", "eeg"}));
  EXPECT_THROW(parse_kinds("bogus"), Error);
}
