#pragma once

// Synthetic stimulus-arousal protocol and the corpus-size estimator.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fprig/ingest_service.hpp"
#include "fprig/sensor_sim.hpp"

namespace fprig {

// One stimulus window. Tone and GSR event times are relative to its onset;
// a tone with t_end_ms == 0 lasts the whole window.
struct Stimulus {
  std::string id;
  std::int64_t duration_ms = 20000;
  std::vector<EegTone> eeg_tones;
  std::vector<GsrEvent> gsr_events;
};

struct StimulusScript {
  std::vector<Stimulus> stimuli;
  std::map<std::string, double> reference;  // stimulus_id -> ref_arousal
  double noise_amplitude = 0.0;
  double gsr_baseline = 2.0;
};

StimulusScript script_from_json(const Json& value);  // Error(validation)
void validate_script(const StimulusScript& script);   // Error(validation)

// Reference table CSV: header `stimulus_id,ref_arousal`.
std::map<std::string, double> parse_reference_csv(std::string_view csv);

struct StimulusResult {
  std::string stimulus_id;
  double mean_arousal = 0.0;
  std::int64_t sample_count = 0;
  std::optional<double> ref_arousal;
  std::optional<double> delta;
};

// Onset of each stimulus: the running sum of the preceding durations.
std::vector<std::int64_t> stimulus_onsets(const StimulusScript& script);

// The stimuli laid end to end as one simulator scenario.
Scenario build_stimulus_scenario(const StimulusScript& script, const SessionConfig& config, std::uint64_t seed);

/// Mean arousal proxy over the cognition records whose t_ms lies in each
/// stimulus window [onset, onset + duration). A window without records is
/// Error(insufficient_data) naming the stimulus.
std::vector<StimulusResult> summarize_stimuli(const StimulusScript& script, const std::vector<CognitionRecord>& records);

/// Records a session through `service` from the concatenated fragments and
/// summarizes it. The session is stopped (sealed) before returning.
std::vector<StimulusResult> run_stimulus_session(const StimulusScript& script, const SessionConfig& config,
                                                 std::uint64_t seed, IngestService& service);

struct Comparison {
  std::vector<StimulusResult> rows;  // rows with a reference, delta filled in
  double pearson_r = 0.0;            // NaN when either side has zero variance
  std::optional<std::string> warning;
};

// Error(insufficient_data) with fewer than two referenced rows.
Comparison compare_reference(const std::vector<StimulusResult>& results, const std::map<std::string, double>& reference);

// Back-computed from the GPT-2 row of the paper's recording-time table
// (40 GB in 1.1 days full, 52 days text); the prose "~40 GB" / "~1 GB" per day
// figures do not reproduce the table.
struct RateConstants {
  double full_gb_per_day = 40.0 / 1.1;
  double text_gb_per_day = 40.0 / 52.0;
};

enum class RecordingMode { full, text };
RecordingMode recording_mode_from_string(std::string_view s);  // Error(validation)

// Unrounded days of 16 h recording; Error(validation) for non-positive input.
double estimate_recording_days(double corpus_gb, RecordingMode mode, const RateConstants& rates = {});

// Rounds to two significant figures.
double round_sig2(double x);
// Shortest decimal rendering of a round_sig2 value ("0.14", "1300", "60000").
std::string format_sig2(double x);

struct EmittedResults {
  std::string csv;  // stimulus_id,mean_arousal,ref_arousal,delta
  Json plot;        // {"series":[{"stimulus_id","mean_arousal","ref_arousal","delta"}...]}
};

// Error(validation) on empty input.
EmittedResults emit_results(const std::vector<StimulusResult>& results);

}  // namespace fprig
