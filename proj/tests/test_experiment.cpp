#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "fprig/experiment.hpp"
#include "support.hpp"

using namespace fprig;
using fprig::testing::HashAttestor;
using fprig::testing::TempDir;

namespace {

// calm: 10 Hz (alpha) tone, flat GSR; agitated: 20 Hz (betaH) tone with a
// +3 uS GSR event at onset.
StimulusScript calm_agitated() {
  StimulusScript s;
  Stimulus calm{"calm", 20000, {{{}, 10.0, 1000.0, 0, 0}}, {}};
  Stimulus agitated{"agitated", 20000, {{{}, 20.0, 1000.0, 0, 0}}, {{0, 3.0}}};
  s.stimuli = {calm, agitated};
  return s;
}

// Expected mean arousal per stimulus, from the cognition formulas applied to
// the idealised band and GSR profiles (no simulation involved).
//
// A window starting at s (2 s long, 1 s hop) is analysed once its last frame
// arrives; the newest GSR sample then is the one at s + 1 s. Its band mix is
// pure alpha, pure betaH, or half/half when it straddles the switch at 20 s.
std::pair<double, double> oracle_means() {
  auto gsr = [](double t_s) { return t_s < 20.0 ? 2.0 : 2.0 + 3.0 * std::exp(-(t_s - 20.0) / 10.0); };
  double calm = 0, agitated = 0;
  int n_calm = 0, n_agitated = 0;
  for (int s = 0; s + 2 <= 40; ++s) {
    const double alpha_share = s + 2 <= 20 ? 1.0 : s >= 20 ? 0.0 : 0.5;
    BandArray b{0, alpha_share * 5e5, 0, (1 - alpha_share) * 5e5, 0};
    // trailing-minute min/max of the samples received so far
    double lo = 1e9, hi = -1e9;
    for (int k = 0; k <= s + 1; ++k) {
      lo = std::min(lo, gsr(k));
      hi = std::max(hi, gsr(k));
    }
    const double g = hi > lo ? (gsr(s + 1) - lo) / (hi - lo) : 0.5;
    auto c = fprig::testing::cognition_oracle(b, g);
    const double a = 5.0 * (c.excitement + c.stress) / 2.0 - 2.5;
    if (s < 20) {
      calm += a;
      ++n_calm;
    } else {
      agitated += a;
      ++n_agitated;
    }
  }
  return {calm / n_calm, agitated / n_agitated};
}

}  // namespace

TEST(Harness, OracleValues) {
  auto [calm, agitated] = oracle_means();
  // 19 windows at -1.25 and the straddling one at +1.25
  EXPECT_NEAR(calm, (19 * -1.25 + 1.25) / 20.0, 1e-9);
  EXPECT_NEAR(agitated, 1.064, 1e-3);
}

TEST(Harness, CalmBelowAgitated) {
  TempDir dir;
  SessionStore store(dir.path());
  HashAttestor attestor;
  IngestService service(store, attestor);
  SessionConfig config;
  config.session_id = "harness";
  auto results = run_stimulus_session(calm_agitated(), config, 1, service);
  ASSERT_EQ(results.size(), 2u);
  auto [calm, agitated] = oracle_means();
  EXPECT_EQ(results[0].stimulus_id, "calm");
  EXPECT_EQ(results[0].sample_count, 20);
  EXPECT_EQ(results[1].sample_count, 19);
  EXPECT_NEAR(results[0].mean_arousal, calm, 0.02);
  EXPECT_NEAR(results[1].mean_arousal, agitated, 0.02);
  EXPECT_LT(results[0].mean_arousal, results[1].mean_arousal);
  EXPECT_EQ(service.manifest("harness").status, SessionStatus::sealed);
}

TEST(Harness, SaturatedStimulusHitsUpperBound) {
  // Pure betaH with GSR rising at every sample keeps excitement = stress ~ 1.
  StimulusScript s;
  Stimulus hot{"hot", 10000, {{{}, 20.0, 1000.0, 0, 0}}, {}};
  for (int k = 0; k < 10; ++k) hot.gsr_events.push_back({k * 1000, 1.0});
  s.stimuli = {hot};
  TempDir dir;
  SessionStore store(dir.path());
  HashAttestor attestor;
  IngestService service(store, attestor);
  SessionConfig config;
  config.session_id = "hot";
  auto r = run_stimulus_session(s, config, 1, service);
  EXPECT_NEAR(r[0].mean_arousal, 2.5, 1e-6);
}

TEST(Harness, EmptyWindowNamesStimulus) {
  StimulusScript s;
  s.stimuli = {Stimulus{"short", 1000, {}, {}}};
  TempDir dir;
  SessionStore store(dir.path());
  HashAttestor attestor;
  IngestService service(store, attestor);
  SessionConfig config;
  config.session_id = "short";
  try {
    run_stimulus_session(s, config, 1, service);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::insufficient_data);
    EXPECT_NE(std::string(e.what()).find("short"), std::string::npos);
  }
}

TEST(Harness, EmptyScriptRejected) {
  EXPECT_THROW(validate_script({}), Error);
  EXPECT_THROW(script_from_json(Json::parse(R"({"stimuli":[]})")), Error);
}

TEST(Harness, ScriptJson) {
  auto s = script_from_json(Json::parse(R"({
    "noise_amplitude": 5,
    "stimuli": [
      {"stimulus_id": "a", "ref_arousal": -1.0, "eeg_tones": [{"frequency_hz": 10}]},
      {"stimulus_id": "b", "duration_ms": 5000, "gsr_events": [{"t_ms": 0, "delta": 2}]}
    ],
    "reference": {"b": 1.5}
  })"));
  ASSERT_EQ(s.stimuli.size(), 2u);
  EXPECT_EQ(s.stimuli[0].duration_ms, 20000);
  EXPECT_EQ(s.reference.at("a"), -1.0);
  EXPECT_EQ(s.reference.at("b"), 1.5);
  EXPECT_EQ(stimulus_onsets(s), (std::vector<std::int64_t>{0, 20000}));
  auto sc = build_stimulus_scenario(s, SessionConfig{}, 3);
  EXPECT_EQ(sc.duration_ms, 25000);
  EXPECT_EQ(sc.gsr_events.at(0).t_ms, 20000);
  EXPECT_EQ(sc.eeg_tones.at(0).t_end_ms, 20000);
}

TEST(Reference, CsvParse) {
  auto r = parse_reference_csv("stimulus_id,ref_arousal\r\ncalm,-1.2\nagitated,1.0\n");
  EXPECT_EQ(r.at("calm"), -1.2);
  EXPECT_EQ(r.at("agitated"), 1.0);
  EXPECT_THROW(parse_reference_csv("id,value\n"), Error);
  EXPECT_THROW(parse_reference_csv("stimulus_id,ref_arousal\ncalm,abc\n"), Error);
}

TEST(Reference, Pearson) {
  std::vector<StimulusResult> res{{"a", -1.0, 5, {}, {}}, {"b", 0.5, 5, {}, {}}, {"c", 2.0, 5, {}, {}}};
  std::map<std::string, double> same{{"a", -1.0}, {"b", 0.5}, {"c", 2.0}};
  auto c = compare_reference(res, same);
  EXPECT_NEAR(c.pearson_r, 1.0, 1e-12);
  for (const auto& row : c.rows) EXPECT_EQ(*row.delta, 0.0);

  std::map<std::string, double> neg{{"a", 1.0}, {"b", -0.5}, {"c", -2.0}};
  EXPECT_NEAR(compare_reference(res, neg).pearson_r, -1.0, 1e-12);

  std::vector<StimulusResult> flat{{"a", 0.3, 5, {}, {}}, {"b", 0.3, 5, {}, {}}};
  auto f = compare_reference(flat, same);
  EXPECT_TRUE(std::isnan(f.pearson_r));
  EXPECT_TRUE(f.warning.has_value());

  try {
    compare_reference(res, {{"a", 1.0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::insufficient_data);
  }
}

// Table 3 of the paper: corpus size -> days of 16 h recording.
TEST(Table3, Reproduced) {
  struct Row {
    double gb;
    RecordingMode mode;
    const char* expected;
  };
  const Row rows[] = {
      {5, RecordingMode::full, "0.14"},     {40, RecordingMode::full, "1.1"},  {46080, RecordingMode::full, "1300"},
      {5, RecordingMode::text, "6.5"},      {40, RecordingMode::text, "52"},   {46080, RecordingMode::text, "60000"},
  };
  for (const auto& r : rows) {
    EXPECT_EQ(format_sig2(estimate_recording_days(r.gb, r.mode)), r.expected) << r.gb;
  }
  // back-derived from the GPT-2 row
  RateConstants rates;
  EXPECT_DOUBLE_EQ(rates.full_gb_per_day, 40.0 / 1.1);
  EXPECT_DOUBLE_EQ(rates.text_gb_per_day, 40.0 / 52.0);
  EXPECT_THROW(estimate_recording_days(0, RecordingMode::full), Error);
  EXPECT_THROW(estimate_recording_days(-1, RecordingMode::text), Error);
  EXPECT_THROW(recording_mode_from_string("video"), Error);
}

TEST(Sig2, Rounding) {
  EXPECT_EQ(round_sig2(0.1375), 0.14);
  EXPECT_EQ(round_sig2(1267.2), 1300.0);
  EXPECT_EQ(format_sig2(59904.0), "60000");
  EXPECT_EQ(format_sig2(6.5), "6.5");
}

TEST(Emit, CsvAndPlot) {
  EXPECT_THROW(emit_results({}), Error);
  auto one = emit_results({{"a", 0.25, 3, {}, {}}});
  EXPECT_EQ(one.csv, "stimulus_id,mean_arousal,ref_arousal,delta\na,0.25,,\n");
  EXPECT_TRUE(one.plot.at("series")[0].at("ref_arousal").is_null());

  std::vector<StimulusResult> rs{{"a", -1.0 / 3.0, 3, 0.1, -1.0 / 3.0 - 0.1}, {"b", 2.2, 4, {}, {}}};
  auto out = emit_results(rs);
  std::istringstream in(out.csv);
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  auto c1 = line.find(',');
  auto c2 = line.find(',', c1 + 1);
  auto c3 = line.find(',', c2 + 1);
  EXPECT_EQ(std::stod(line.substr(c1 + 1, c2 - c1 - 1)), rs[0].mean_arousal);
  EXPECT_EQ(std::stod(line.substr(c2 + 1, c3 - c2 - 1)), *rs[0].ref_arousal);
  EXPECT_EQ(std::stod(line.substr(c3 + 1)), *rs[0].delta);
  EXPECT_EQ(out.plot.at("series").size(), 2u);
}
