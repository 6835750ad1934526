#include <gtest/gtest.h>

#include <chrono>
#include <random>

#include "fprig/analysis.hpp"
#include "fprig/image.hpp"
#include "fprig/providers.hpp"
#include "fprig/sensor_sim.hpp"
#include "support.hpp"

using namespace fprig;
using fprig::testing::dft_band_power;

namespace {

Scenario tone_scenario(double hz, double noise = 0.0) {
  Scenario sc;
  sc.config.session_id = "bp";
  sc.duration_ms = 2000;
  sc.noise_amplitude = noise;
  sc.eeg_tones.push_back({{}, hz, 1000.0, 0, 2000});
  return sc;
}

double total(const BandArray& a) {
  double s = 0;
  for (double v : a) s += v;
  return s;
}

}  // namespace

TEST(BandPower, ZeroFramesGiveZeroPower) {
  std::vector<EegFrame> frames(256, EegFrame{0, std::vector<std::int16_t>(14, 0), 0});
  auto bp = band_power(frames);
  for (double v : bp.avg) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(bp.per_channel.size(), 14u);
}

TEST(BandPower, WrongFrameCountIsWindowError) {
  std::vector<EegFrame> frames(255, EegFrame{0, std::vector<std::int16_t>(14, 0), 0});
  try {
    band_power(frames);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::window);
  }
}

// Pure tones land in their band and agree with the un-windowed DFT oracle.
TEST(BandPower, PureTonesMatchDirectDft) {
  const std::pair<double, std::size_t> cases[] = {{6, kTheta}, {10, kAlpha}, {14, kBetaL}, {20, kBetaH}, {35, kGamma}};
  for (auto [hz, band] : cases) {
    auto frames = gen_eeg(tone_scenario(hz), 0, 2000);
    ASSERT_EQ(frames.size(), 256u);
    const auto t0 = std::chrono::steady_clock::now();
    auto bp = band_power(frames);
    EXPECT_LT(fprig::testing::elapsed_s(t0), 1.0);
    EXPECT_EQ(bp.t_ms, 0);
    EXPECT_GE(bp.avg[band] / total(bp.avg), 0.95) << hz << " Hz";

    BandArray oracle{};
    for (std::size_t c = 0; c < kEegChannels; ++c) {
      std::vector<double> x;
      for (const auto& f : frames) x.push_back(f.channels[c]);
      auto o = dft_band_power(x, 128.0);
      for (std::size_t b = 0; b < kBandCount; ++b) oracle[b] += o[b] / kEegChannels;
    }
    EXPECT_NEAR(bp.avg[band], oracle[band], 0.02 * oracle[band]) << hz << " Hz";
    // A^2/2 for amplitude 1000
    EXPECT_NEAR(oracle[band], 5e5, 0.01 * 5e5);
  }
}

TEST(BandPower, OffBinToneStillDominant) {
  auto frames = gen_eeg(tone_scenario(10.25, 20.0), 0, 2000);
  auto bp = band_power(frames);
  EXPECT_GE(bp.avg[kAlpha] / total(bp.avg), 0.95);
}

TEST(Gsr, NormalizeExamples) {
  std::vector<GsrSample> h{{0, 1.0, 1}, {1000, 3.0, 2}, {2000, 2.0, 3}};
  EXPECT_DOUBLE_EQ(normalize_gsr(h, h[2]), 0.5);
  EXPECT_DOUBLE_EQ(normalize_gsr(h, h[1]), 1.0);
  std::vector<GsrSample> flat{{0, 2.0, 1}, {1000, 2.0, 2}};
  EXPECT_DOUBLE_EQ(normalize_gsr(flat, flat[1]), 0.5);
  EXPECT_DOUBLE_EQ(normalize_gsr({}, GsrSample{0, 7.0, 1}), 0.5);
}

TEST(Gsr, NormalizeUsesTrailingMinute) {
  std::vector<GsrSample> h{{0, 100.0, 1}, {70000, 1.0, 2}, {80000, 3.0, 3}, {90000, 2.0, 4}};
  EXPECT_DOUBLE_EQ(normalize_gsr(h, h[3]), 0.5);
}

TEST(Cognition, AllZeroBands) {
  BandPowerRecord bp{0, std::vector<BandArray>(14, BandArray{}), {}};
  auto c = cognition_metrics(bp, 0.5);
  EXPECT_DOUBLE_EQ(c.excitement, 0.25);
  EXPECT_DOUBLE_EQ(c.stress, 0.25);
  EXPECT_DOUBLE_EQ(c.engagement, 0.0);
  EXPECT_DOUBLE_EQ(c.relaxation, 0.0);
}

TEST(Cognition, AlphaDominant) {
  BandArray b{1, 100, 1, 1, 1};
  BandPowerRecord bp{0, std::vector<BandArray>(14, b), b};
  auto c = cognition_metrics(bp, 0.0);
  // relaxation = squash(100/2), stress = 0.5 squash(1/101)
  EXPECT_NEAR(c.relaxation, 50.0 / 51.0, 1e-12);
  EXPECT_NEAR(c.stress, 0.5 * (1.0 / 101.0) / (1.0 + 1.0 / 101.0), 1e-12);
  EXPECT_GT(c.relaxation, 0.95);
  EXPECT_LT(c.stress, 0.01);
}

TEST(Cognition, MonotoneInG) {
  BandArray b{3, 2, 5, 7, 1};
  BandPowerRecord bp{0, std::vector<BandArray>(14, b), b};
  double prev_e = -1, prev_s = -1;
  for (double g = 0.0; g <= 1.0; g += 0.1) {
    auto c = cognition_metrics(bp, g);
    EXPECT_GT(c.excitement, prev_e);
    EXPECT_GT(c.stress, prev_s);
    prev_e = c.excitement;
    prev_s = c.stress;
    auto o = fprig::testing::cognition_oracle(b, g);
    EXPECT_NEAR(c.excitement, o.excitement, 1e-12);
    EXPECT_NEAR(c.stress, o.stress, 1e-12);
  }
}

TEST(Arousal, ClosedFormPoints) {
  CognitionRecord c;
  EXPECT_EQ(arousal_proxy(c), -2.5);
  c.excitement = c.stress = 0.5;
  EXPECT_EQ(arousal_proxy(c), 0.0);
  c.excitement = c.stress = 1.0;
  EXPECT_EQ(arousal_proxy(c), 2.5);
}

TEST(Arousal, BoundedUnderRandomInputs) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> band(0.0, 1e6);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 100000; ++i) {
    BandArray b{band(rng), band(rng), band(rng), band(rng), band(rng)};
    if (i % 7 == 0) b[rng() % 5] = 0.0;
    BandPowerRecord bp{0, {}, b};
    auto a = arousal_proxy(cognition_metrics(bp, unit(rng)));
    ASSERT_GE(a, -2.5);
    ASSERT_LE(a, 2.5);
  }
}

// ---------------------------------------------------------------------------
// Images

TEST(Blur, NoBoxesIsIdentity) {
  Scenario sc;
  sc.config.session_id = "img";
  sc.image_script.push_back({0, "room", {}, {}, {}});
  auto img = gen_image(sc, 0);
  EXPECT_EQ(blur_faces(img.bytes, {}), img.bytes);
}

TEST(Blur, FacedImagesContract) {
  for (int i = 0; i < 50; ++i) {
    Scenario sc;
    sc.config.session_id = "img";
    sc.rng_seed = static_cast<std::uint64_t>(i);
    Box box{5 + 4 * i, 10 + 2 * i, 40 + i, 50 + (i % 7) * 5};
    sc.image_script.push_back({0, "scene-" + std::to_string(i), {box}, {}, {}});
    auto img = gen_image(sc, 0);
    auto out = blur_faces(img.bytes, std::vector<Box>{box});
    ASSERT_EQ(out.size(), img.bytes.size());

    auto before = decode_ppm(img.bytes);
    auto after = decode_ppm(out);
    const double v0 = region_variance(before.image, box);
    const double v1 = region_variance(after.image, box);
    EXPECT_LE(v1, 0.10 * v0) << "image " << i;

    EXPECT_EQ(out.substr(0, before.pixel_offset), img.bytes.substr(0, before.pixel_offset));
    for (int y = 0; y < kImageHeight; ++y) {
      for (int x = 0; x < kImageWidth; ++x) {
        const bool inside = x >= box.x && x < box.x + box.w && y >= box.y && y < box.y + box.h;
        if (inside) continue;
        const auto* a = before.image.pixel(x, y);
        const auto* b = after.image.pixel(x, y);
        ASSERT_TRUE(a[0] == b[0] && a[1] == b[1] && a[2] == b[2]) << "pixel " << x << "," << y;
      }
    }
  }
}

TEST(Blur, OriginPixelOutsideBoxUnchanged) {
  Scenario sc;
  sc.config.session_id = "img";
  Box box{100, 100, 50, 50};
  sc.image_script.push_back({0, "room", {box}, {}, {}});
  auto img = gen_image(sc, 0);
  auto out = blur_faces(img.bytes, std::vector<Box>{box});
  auto a = decode_ppm(img.bytes), b = decode_ppm(out);
  EXPECT_TRUE(std::equal(a.image.pixel(0, 0), a.image.pixel(0, 0) + 3, b.image.pixel(0, 0)));
}

TEST(Ppm, DecodeRejectsGarbage) {
  EXPECT_THROW(decode_ppm("P5\n1 1\n255\n\0"), Error);
  EXPECT_THROW(decode_ppm("not an image"), Error);
}

TEST(Faces, SidecarPassThroughAndClip) {
  ReferenceProvider p;
  Scenario sc;
  sc.config.session_id = "img";
  sc.image_script.push_back({0, "room", {}, {}, {}});
  auto img = gen_image(sc, 0);

  ImageTruth one{{{10, 10, 20, 20}}, {}, {}};
  EXPECT_EQ(detect_faces(img.bytes, p, 0, &one), (std::vector<Box>{{10, 10, 20, 20}}));
  ImageTruth none;
  EXPECT_TRUE(detect_faces(img.bytes, p, 0, &none).empty());
  ImageTruth over{{{300, 200, 50, 100}}, {}, {}};
  EXPECT_EQ(detect_faces(img.bytes, p, 0, &over), (std::vector<Box>{{300, 200, 20, 40}}));
  EXPECT_THROW(detect_faces("junk", p, 0, &one), Error);
  try {
    detect_faces(img.bytes, p, 0, nullptr);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::provider);
  }
}

TEST(Labels, Annotation) {
  ReferenceProvider p;
  Scenario sc;
  sc.config.session_id = "img";
  sc.image_script.push_back({0, "room", {}, {}, {}});
  auto img = gen_image(sc, 0);
  ImageTruth t{{}, {"Person", "Burger"}, {"EXIT"}};
  auto a = annotate_image(img.bytes, p, 42, &t);
  ASSERT_EQ(a.labels.size(), 2u);
  EXPECT_EQ(a.labels[0], (LabelScore{"Person", 1.0}));
  EXPECT_EQ(a.labels[1], (LabelScore{"Burger", 1.0}));
  EXPECT_EQ(a.texts, std::vector<std::string>{"EXIT"});
  EXPECT_EQ(a.t_ms, 42);
  ImageTruth empty;
  auto e = annotate_image(img.bytes, p, 0, &empty);
  EXPECT_TRUE(e.labels.empty() && e.texts.empty() && e.face_boxes.empty());
}

// ---------------------------------------------------------------------------
// Audio / text

TEST(Transcribe, Examples) {
  ReferenceProvider p;
  std::vector<std::int16_t> silence(16000, 0);
  auto wav = encode_wav(silence, 16000);
  AudioTruth none;
  EXPECT_TRUE(transcribe(wav, p, 0, &none).empty());

  AudioTruth one{{{0, 3000, Speaker::wearer, "start ziggy I feel calm end ziggy"}}};
  auto r = transcribe(wav, p, 5000, &one);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].speaker, Speaker::wearer);
  EXPECT_EQ(r[0].text, "start ziggy I feel calm end ziggy");
  EXPECT_EQ(r[0].t_start_ms, 5000);

  AudioTruth two{{{0, 500, Speaker::wearer, "hi"}, {600, 900, Speaker::other, "hello"}}};
  r = transcribe(wav, p, 0, &two);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_NE(r[0].speaker, r[1].speaker);
}

TEST(Sentiment, Examples) {
  EXPECT_EQ(sentiment("").label, SentimentLabel::neutral);
  EXPECT_EQ(sentiment("I love this great day").label, SentimentLabel::positive);
  auto m = sentiment("great food but awful service");
  EXPECT_EQ(m.label, SentimentLabel::mixed);
  EXPECT_DOUBLE_EQ(m.scores[0] + m.scores[1] + m.scores[2] + m.scores[3], 1.0);
  EXPECT_EQ(sentiment("this is awful").label, SentimentLabel::negative);
  EXPECT_EQ(sentiment("the table is brown").label, SentimentLabel::neutral);
}

TEST(Sentiment, CustomLexicon) {
  auto lex = Lexicon::parse("# test\nsplendid\t+1\n\ngrim\t-1\n");
  EXPECT_EQ(lex.size(), 2u);
  EXPECT_EQ(sentiment("Splendid!", 0, lex).label, SentimentLabel::positive);
  EXPECT_EQ(sentiment("grim", 0, lex).label, SentimentLabel::negative);
}

TEST(Expression, ScriptedCues) {
  std::vector<EegFrame> frames(256);
  for (std::size_t i = 0; i < frames.size(); ++i) frames[i].t_ms = 4000 + static_cast<std::int64_t>(i * 1000 / 128);
  auto none = facial_expression(frames, {});
  EXPECT_EQ(none.lower_face, LowerFace::neutral);
  EXPECT_EQ(none.eye_action, EyeAction::neutral);
  EXPECT_EQ(none.t_ms, 4000);

  std::vector<ExpressionCue> smile{{4300, EyeAction::neutral, UpperFace::neutral, LowerFace::smile, 0.8, 1}};
  auto s = facial_expression(frames, smile);
  EXPECT_EQ(s.lower_face, LowerFace::smile);
  EXPECT_EQ(s.t_ms, 4300);

  std::vector<ExpressionCue> blink{{4100, EyeAction::blink, UpperFace::neutral, LowerFace::neutral, 1.0, 1}};
  EXPECT_EQ(facial_expression(frames, blink).eye_action, EyeAction::blink);
}
