#include "fprig/des.hpp"

#include <algorithm>
#include <cctype>
#include <random>

namespace fprig {

ToneSchedule schedule_tones(const SessionConfig& config, std::int64_t duration_ms) {
  ToneSchedule s;
  s.session_id = config.session_id;
  s.interval_min_s = config.des_interval_min_s;
  s.interval_max_s = config.des_interval_max_s;
  s.seed = config.rng_seed;

  const std::uint64_t lo = static_cast<std::uint64_t>(std::max<std::int64_t>(config.des_interval_min_s, 0)) * 1000;
  const std::uint64_t hi = static_cast<std::uint64_t>(std::max<std::int64_t>(config.des_interval_max_s, 0)) * 1000;
  if (hi < lo || hi == 0) return s;
  const std::uint64_t span = hi - lo + 1;
  // mt19937_64 output is fixed by the standard; the modulo mapping keeps the
  // schedule identical across standard library implementations.
  std::mt19937_64 rng(config.rng_seed);
  std::int64_t t = 0;
  while (true) {
    t += static_cast<std::int64_t>(lo + rng() % span);
    if (t >= duration_ms) break;
    s.tone_times_ms.push_back(t);
  }
  return s;
}

namespace {

struct Word {
  std::string original;
  std::string folded;  // lowercase, punctuation stripped
  std::size_t record = 0;
};

std::string fold(std::string_view token) {
  std::string out;
  for (unsigned char c : token) {
    if (std::isalnum(c)) out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

std::vector<std::string> phrase_words(std::string_view phrase) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : phrase) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) out.push_back(fold(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(fold(cur));
  std::erase(out, std::string{});
  return out;
}

bool matches_at(const std::vector<Word>& words, std::size_t i, const std::vector<std::string>& phrase) {
  if (phrase.empty() || i + phrase.size() > words.size()) return false;
  for (std::size_t k = 0; k < phrase.size(); ++k) {
    if (words[i + k].folded != phrase[k]) return false;
  }
  return true;
}

}  // namespace

std::vector<DesReport> extract_reports(std::span<const TranscriptRecord> transcripts, const KeyPhrases& phrases) {
  std::vector<const TranscriptRecord*> wearer;
  for (const auto& t : transcripts) {
    if (t.speaker == Speaker::wearer) wearer.push_back(&t);
  }
  std::vector<Word> words;
  for (std::size_t r = 0; r < wearer.size(); ++r) {
    std::string cur;
    auto flush = [&] {
      if (cur.empty()) return;
      auto folded = fold(cur);
      words.push_back({std::move(cur), std::move(folded), r});
      cur.clear();
    };
    for (char c : wearer[r]->text) {
      if (std::isspace(static_cast<unsigned char>(c))) flush();
      else cur.push_back(c);
    }
    flush();
  }

  const auto start = phrase_words(phrases.start);
  const auto end = phrase_words(phrases.end);
  std::vector<DesReport> out;
  bool open = false;
  DesReport current;
  std::string text;
  auto append = [&](const Word& w) {
    if (!text.empty()) text.push_back(' ');
    text += w.original;
  };

  for (std::size_t i = 0; i < words.size();) {
    if (!open) {
      if (matches_at(words, i, start)) {
        open = true;
        text.clear();
        current = {};
        current.t_start_ms = wearer[words[i].record]->t_start_ms;
        i += start.size();
      } else {
        ++i;  // unmatched "end" phrases and free speech outside reports
      }
      continue;
    }
    if (matches_at(words, i, end)) {
      const auto& last = words[i + end.size() - 1];
      current.t_end_ms = std::max(current.t_start_ms, wearer[last.record]->t_end_ms);
      current.text = text;
      current.terminated = true;
      out.push_back(current);
      open = false;
      i += end.size();
      continue;
    }
    append(words[i]);
    ++i;
  }
  if (open) {
    current.text = text;
    current.terminated = false;
    current.t_end_ms = std::max(current.t_start_ms, wearer.back()->t_end_ms);
    out.push_back(current);
  }
  return out;
}

}  // namespace fprig
