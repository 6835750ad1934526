#pragma once

// Ground truth produced by the simulator alongside each media file. The
// reference analyzers read it in place of remote recognition services.

#include <cstdint>
#include <string>
#include <vector>

#include "fprig/session_model.hpp"

namespace fprig {

struct ImageTruth {
  std::vector<Box> face_boxes;
  std::vector<std::string> labels;
  std::vector<std::string> texts;
  bool operator==(const ImageTruth&) const = default;
};

// Times are relative to the start of the audio chunk.
struct SpeechLine {
  std::int64_t t_start_ms = 0;
  std::int64_t t_end_ms = 0;
  Speaker speaker = Speaker::wearer;
  std::string text;
  bool operator==(const SpeechLine&) const = default;
};

struct AudioTruth {
  std::vector<SpeechLine> lines;
  bool operator==(const AudioTruth&) const = default;
};

Json image_truth_to_json(const ImageTruth& truth);
ImageTruth image_truth_from_json(const Json& value);
Json audio_truth_to_json(const AudioTruth& truth);
AudioTruth audio_truth_from_json(const Json& value);

Json box_to_json(const Box& b);
Box box_from_json(const Json& value);

}  // namespace fprig
