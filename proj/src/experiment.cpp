#include "fprig/experiment.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "fprig/analysis.hpp"
#include "fprig/error.hpp"

namespace fprig {

StimulusScript script_from_json(const Json& j) {
  StimulusScript s;
  try {
    s.noise_amplitude = j.value("noise_amplitude", 0.0);
    s.gsr_baseline = j.value("gsr_baseline", 2.0);
    for (const auto& st : j.at("stimuli")) {
      Stimulus stim;
      stim.id = st.at("stimulus_id").get<std::string>();
      stim.duration_ms = st.value("duration_ms", std::int64_t{20000});
      for (const auto& t : st.value("eeg_tones", Json::array())) {
        EegTone tone;
        tone.channels = t.value("channels", std::vector<int>{});
        tone.frequency_hz = t.at("frequency_hz").get<double>();
        tone.amplitude = t.value("amplitude", 1000.0);
        tone.t_start_ms = t.value("t_start_ms", std::int64_t{0});
        tone.t_end_ms = t.value("t_end_ms", std::int64_t{0});
        stim.eeg_tones.push_back(std::move(tone));
      }
      for (const auto& e : st.value("gsr_events", Json::array())) {
        stim.gsr_events.push_back({e.at("t_ms").get<std::int64_t>(), e.at("delta").get<double>()});
      }
      if (st.contains("ref_arousal")) s.reference[stim.id] = st.at("ref_arousal").get<double>();
      s.stimuli.push_back(std::move(stim));
    }
    if (j.contains("reference")) {
      for (const auto& [id, v] : j.at("reference").items()) s.reference[id] = v.get<double>();
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::validation, std::string("stimulus script: ") + e.what(), "stimuli");
  }
  validate_script(s);
  return s;
}

void validate_script(const StimulusScript& s) {
  if (s.stimuli.empty()) throw Error(ErrorCode::validation, "stimuli: script is empty", "stimuli");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < s.stimuli.size(); ++i) {
    const auto& st = s.stimuli[i];
    auto f = "stimuli[" + std::to_string(i) + "]";
    if (st.id.empty()) throw Error(ErrorCode::validation, f + ".stimulus_id: must not be empty", f + ".stimulus_id");
    if (!ids.insert(st.id).second) throw Error(ErrorCode::validation, f + ".stimulus_id: duplicate '" + st.id + "'", f + ".stimulus_id");
    if (st.duration_ms <= 0) throw Error(ErrorCode::validation, f + ".duration_ms: must be > 0", f + ".duration_ms");
  }
  for (const auto& [id, v] : s.reference) {
    if (!(v >= -2.5 && v <= 2.5)) throw Error(ErrorCode::validation, "reference." + id + ": must be in [-2.5, 2.5]", "reference");
  }
}

std::map<std::string, double> parse_reference_csv(std::string_view csv) {
  std::map<std::string, double> out;
  std::istringstream in{std::string(csv)};
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line != "stimulus_id,ref_arousal") {
        throw Error(ErrorCode::validation, "reference csv: expected header stimulus_id,ref_arousal", "reference");
      }
      continue;
    }
    auto comma = line.find(',');
    if (comma == std::string::npos) throw Error(ErrorCode::validation, "reference csv: bad row '" + line + "'", "reference");
    try {
      out[line.substr(0, comma)] = std::stod(line.substr(comma + 1));
    } catch (const std::exception&) {
      throw Error(ErrorCode::validation, "reference csv: bad value in '" + line + "'", "reference");
    }
  }
  return out;
}

std::vector<std::int64_t> stimulus_onsets(const StimulusScript& script) {
  std::vector<std::int64_t> out;
  std::int64_t t = 0;
  for (const auto& s : script.stimuli) {
    out.push_back(t);
    t += s.duration_ms;
  }
  return out;
}

Scenario build_stimulus_scenario(const StimulusScript& script, const SessionConfig& config, std::uint64_t seed) {
  validate_script(script);
  Scenario sc;
  sc.config = config;
  sc.config.rng_seed = seed;
  sc.rng_seed = seed;
  sc.noise_amplitude = script.noise_amplitude;
  sc.gsr_baseline = script.gsr_baseline;
  auto onsets = stimulus_onsets(script);
  for (std::size_t i = 0; i < script.stimuli.size(); ++i) {
    const auto& st = script.stimuli[i];
    const auto onset = onsets[i];
    for (auto tone : st.eeg_tones) {
      auto end = tone.t_end_ms == 0 ? st.duration_ms : std::min(tone.t_end_ms, st.duration_ms);
      tone.t_start_ms += onset;
      tone.t_end_ms = onset + end;
      sc.eeg_tones.push_back(std::move(tone));
    }
    for (auto e : st.gsr_events) {
      e.t_ms += onset;
      sc.gsr_events.push_back(e);
    }
  }
  sc.duration_ms = onsets.back() + script.stimuli.back().duration_ms;
  return sc;
}

std::vector<StimulusResult> summarize_stimuli(const StimulusScript& script, const std::vector<CognitionRecord>& records) {
  auto onsets = stimulus_onsets(script);
  std::vector<StimulusResult> out;
  for (std::size_t i = 0; i < script.stimuli.size(); ++i) {
    const auto& st = script.stimuli[i];
    const auto t0 = onsets[i];
    const auto t1 = t0 + st.duration_ms;
    double sum = 0.0;
    std::int64_t n = 0;
    for (const auto& c : records) {
      if (c.t_ms >= t0 && c.t_ms < t1) {
        sum += arousal_proxy(c);
        ++n;
      }
    }
    if (n == 0) {
      throw Error(ErrorCode::insufficient_data, "stimulus '" + st.id + "': no cognition records in its window",
                  st.id);
    }
    StimulusResult r;
    r.stimulus_id = st.id;
    r.mean_arousal = sum / static_cast<double>(n);
    r.sample_count = n;
    if (auto it = script.reference.find(st.id); it != script.reference.end()) {
      r.ref_arousal = it->second;
      r.delta = r.mean_arousal - it->second;
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<StimulusResult> run_stimulus_session(const StimulusScript& script, const SessionConfig& config,
                                                 std::uint64_t seed, IngestService& service) {
  auto scenario = build_stimulus_scenario(script, config, seed);
  check_scenario(scenario);
  const auto& sid = scenario.config.session_id;
  service.start_session(scenario.config);
  constexpr std::int64_t kChunkMs = 10000;
  for (std::int64_t t = 0; t < scenario.duration_ms; t += kChunkMs) {
    service.ingest_batch(build_envelopes(scenario, t, t + kChunkMs));
  }
  service.stop_session(sid);
  std::vector<CognitionRecord> cognition;
  for (const auto& r : service.playback(sid, 0, scenario.duration_ms, {"cognition"})) {
    cognition.push_back(std::get<CognitionRecord>(r));
  }
  return summarize_stimuli(script, cognition);
}

Comparison compare_reference(const std::vector<StimulusResult>& results, const std::map<std::string, double>& reference) {
  Comparison c;
  for (auto r : results) {
    auto it = reference.find(r.stimulus_id);
    if (it == reference.end()) continue;
    r.ref_arousal = it->second;
    r.delta = r.mean_arousal - it->second;
    c.rows.push_back(std::move(r));
  }
  if (c.rows.size() < 2) {
    throw Error(ErrorCode::insufficient_data, "need at least two stimuli with reference values", "reference");
  }
  const double n = static_cast<double>(c.rows.size());
  double mx = 0, my = 0;
  for (const auto& r : c.rows) {
    mx += r.mean_arousal;
    my += *r.ref_arousal;
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (const auto& r : c.rows) {
    const double dx = r.mean_arousal - mx;
    const double dy = *r.ref_arousal - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    c.pearson_r = std::numeric_limits<double>::quiet_NaN();
    c.warning = "Pearson r undefined: zero variance in measured or reference arousal";
  } else {
    c.pearson_r = sxy / std::sqrt(sxx * syy);
  }
  return c;
}

RecordingMode recording_mode_from_string(std::string_view s) {
  if (s == "full") return RecordingMode::full;
  if (s == "text") return RecordingMode::text;
  throw Error(ErrorCode::validation, "mode: expected full or text", "mode");
}

double estimate_recording_days(double corpus_gb, RecordingMode mode, const RateConstants& rates) {
  if (!(corpus_gb > 0.0) || !std::isfinite(corpus_gb)) {
    throw Error(ErrorCode::validation, "corpus_gb: must be positive", "corpus_gb");
  }
  const double rate = mode == RecordingMode::full ? rates.full_gb_per_day : rates.text_gb_per_day;
  if (!(rate > 0.0)) throw Error(ErrorCode::validation, "rate: must be positive", "rates");
  return corpus_gb / rate;
}

double round_sig2(double x) {
  if (x == 0.0 || !std::isfinite(x)) return x;
  const int exp10 = static_cast<int>(std::floor(std::log10(std::fabs(x))));
  const double scale = std::pow(10.0, 1 - exp10);
  return std::round(x * scale) / scale;
}

std::string format_sig2(double x) {
  std::ostringstream out;
  out.precision(2);
  const double r = round_sig2(x);
  if (std::fabs(r) >= 100.0) {
    out << std::fixed;
    out.precision(0);
  }
  out << r;
  return out.str();
}

namespace {

// shortest text that round-trips
std::string csv_number(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

}  // namespace

EmittedResults emit_results(const std::vector<StimulusResult>& results) {
  if (results.empty()) throw Error(ErrorCode::validation, "results: nothing to emit", "results");
  EmittedResults out;
  out.csv = "stimulus_id,mean_arousal,ref_arousal,delta\n";
  Json series = Json::array();
  for (const auto& r : results) {
    out.csv += r.stimulus_id + "," + csv_number(r.mean_arousal) + "," +
               (r.ref_arousal ? csv_number(*r.ref_arousal) : "") + "," + (r.delta ? csv_number(*r.delta) : "") + "\n";
    series.push_back({{"stimulus_id", r.stimulus_id},
                      {"mean_arousal", r.mean_arousal},
                      {"sample_count", r.sample_count},
                      {"ref_arousal", r.ref_arousal ? Json(*r.ref_arousal) : Json(nullptr)},
                      {"delta", r.delta ? Json(*r.delta) : Json(nullptr)}});
  }
  out.plot = {{"kind", "mean_arousal_by_stimulus"}, {"y_range", {-2.5, 2.5}}, {"series", series}};
  return out;
}

}  // namespace fprig
