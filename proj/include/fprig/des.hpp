#pragma once

// Descriptive experience sampling: random tone prompts and key-phrase
// delimited reports in the wearer's transcript.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fprig/session_model.hpp"

namespace fprig {

struct ToneSchedule {
  std::string session_id;
  std::vector<std::int64_t> tone_times_ms;  // ascending
  std::int64_t interval_min_s = 0;
  std::int64_t interval_max_s = 0;
  std::uint64_t seed = 0;
};

/// First tone at U[min, max] seconds, each further gap U[min, max], drawn in
/// whole milliseconds from a generator seeded with config.rng_seed. Tones at
/// or after `duration_ms` are dropped.
ToneSchedule schedule_tones(const SessionConfig& config, std::int64_t duration_ms);

struct KeyPhrases {
  std::string start = "start ziggy";
  std::string end = "end ziggy";
};

/// Scans the wearer transcripts (other speakers are ignored) as one word
/// stream, matching the key phrases case-insensitively and across record
/// boundaries. Text between a start and the next end phrase becomes one
/// report; a start phrase inside an open report is literal text; an end phrase
/// with no open report is ignored; a report still open at the end of the
/// transcripts is returned with terminated = false.
std::vector<DesReport> extract_reports(std::span<const TranscriptRecord> transcripts,
                                       const KeyPhrases& phrases = {});

}  // namespace fprig
