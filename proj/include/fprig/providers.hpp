#pragma once

// Analyzer providers for the derived streams. The reference provider is
// deterministic and reads simulator ground truth; the sidecar provider reads
// ground truth from a JSON file; the remote provider delegates each item to an
// HTTP service (see docs/providers.md).

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fprig/image.hpp"
#include "fprig/session_model.hpp"
#include "fprig/sidecar.hpp"

namespace fprig {

// word -> +1 | -1
class Lexicon {
 public:
  Lexicon() = default;
  explicit Lexicon(std::unordered_map<std::string, int> valence) : valence_(std::move(valence)) {}

  // One `word<TAB>+1|-1` entry per line; blank lines and '#' comments skipped.
  static Lexicon parse(std::string_view text);
  static Lexicon load(const std::filesystem::path& path);
  static const Lexicon& builtin();

  int valence(std::string_view word) const;
  std::size_t size() const { return valence_.size(); }

 private:
  std::unordered_map<std::string, int> valence_;
};

// Lowercased alphanumeric/apostrophe tokens.
std::vector<std::string> tokenize_words(std::string_view text);

/// Lexicon-count sentiment. p and n count positive and negative tokens:
///   p+n == 0         -> neutral  (0, 0, 0, 1)
///   p >= 1 && n >= 1 -> mixed    (p/2(p+n), n/2(p+n), 1/2, 0)
///   p > n            -> positive (1, 0, 0, 0)
///   otherwise        -> negative (0, 1, 0, 0)
SentimentRecord sentiment(std::string_view text, std::int64_t t_ms = 0,
                          const Lexicon& lexicon = Lexicon::builtin());

/// Scripted facial expression for one analysis window: the first cue in
/// [window start, window start + hop_ms) is reported at its own time;
/// without a cue the record is all-neutral at the window start.
FacialExpressionRecord facial_expression(std::span<const EegFrame> frames,
                                         std::span<const ExpressionCue> cues,
                                         std::int64_t hop_ms = 1000);

class AnalyzerProvider {
 public:
  virtual ~AnalyzerProvider() = default;

  virtual std::vector<Box> detect_faces(const Image& image, std::int64_t t_ms, const ImageTruth* truth) = 0;
  virtual ImageAnnotation annotate_image(const Image& image, std::int64_t t_ms, const ImageTruth* truth) = 0;
  virtual std::vector<TranscriptRecord> transcribe(std::string_view wav, std::int64_t chunk_t0_ms,
                                                   const AudioTruth* truth) = 0;
  virtual SentimentRecord analyze_sentiment(std::string_view text, std::int64_t t_ms) = 0;
  virtual CognitionRecord cognition(const BandPowerRecord& bp, double gsr_norm) = 0;
  virtual FacialExpressionRecord expression(std::span<const EegFrame> frames,
                                            std::span<const ExpressionCue> cues) = 0;
};

class ReferenceProvider : public AnalyzerProvider {
 public:
  explicit ReferenceProvider(const Lexicon& lexicon = Lexicon::builtin()) : lexicon_(lexicon) {}

  std::vector<Box> detect_faces(const Image& image, std::int64_t t_ms, const ImageTruth* truth) override;
  ImageAnnotation annotate_image(const Image& image, std::int64_t t_ms, const ImageTruth* truth) override;
  std::vector<TranscriptRecord> transcribe(std::string_view wav, std::int64_t chunk_t0_ms,
                                           const AudioTruth* truth) override;
  SentimentRecord analyze_sentiment(std::string_view text, std::int64_t t_ms) override;
  CognitionRecord cognition(const BandPowerRecord& bp, double gsr_norm) override;
  FacialExpressionRecord expression(std::span<const EegFrame> frames,
                                    std::span<const ExpressionCue> cues) override;

 private:
  const Lexicon& lexicon_;
};

// Ground truth from a JSON file:
//   {"images": {"<t_ms>": ImageTruth, ...}, "audio": {"<t_ms>": AudioTruth, ...}}
// Analyzers without a sidecar notion fall back to the reference behaviour.
class SidecarFileProvider : public ReferenceProvider {
 public:
  explicit SidecarFileProvider(const std::filesystem::path& path);

  std::vector<Box> detect_faces(const Image& image, std::int64_t t_ms, const ImageTruth* truth) override;
  ImageAnnotation annotate_image(const Image& image, std::int64_t t_ms, const ImageTruth* truth) override;
  std::vector<TranscriptRecord> transcribe(std::string_view wav, std::int64_t chunk_t0_ms,
                                           const AudioTruth* truth) override;

 private:
  const ImageTruth& image_truth(std::int64_t t_ms) const;

  std::map<std::int64_t, ImageTruth> images_;
  std::map<std::int64_t, AudioTruth> audio_;
};

class RemoteProvider : public AnalyzerProvider {
 public:
  explicit RemoteProvider(std::string endpoint, int timeout_s = 10);

  std::vector<Box> detect_faces(const Image& image, std::int64_t t_ms, const ImageTruth* truth) override;
  ImageAnnotation annotate_image(const Image& image, std::int64_t t_ms, const ImageTruth* truth) override;
  std::vector<TranscriptRecord> transcribe(std::string_view wav, std::int64_t chunk_t0_ms,
                                           const AudioTruth* truth) override;
  SentimentRecord analyze_sentiment(std::string_view text, std::int64_t t_ms) override;
  CognitionRecord cognition(const BandPowerRecord& bp, double gsr_norm) override;
  FacialExpressionRecord expression(std::span<const EegFrame> frames,
                                    std::span<const ExpressionCue> cues) override;

 private:
  Json call(const std::string& analyzer, const Json& request);

  std::string endpoint_;
  int timeout_s_;
};

// One provider bound per derived stream.
struct AnalyzerSet {
  std::shared_ptr<AnalyzerProvider> faces;
  std::shared_ptr<AnalyzerProvider> labels;
  std::shared_ptr<AnalyzerProvider> transcription;
  std::shared_ptr<AnalyzerProvider> sentiment;
  std::shared_ptr<AnalyzerProvider> cognition;
  std::shared_ptr<AnalyzerProvider> expression;
};

AnalyzerSet make_analyzers(const ProviderConfig& config);

// Decodes the image, asks the provider, clips every box to the image bounds.
std::vector<Box> detect_faces(std::string_view image_bytes, AnalyzerProvider& provider, std::int64_t t_ms,
                              const ImageTruth* truth);
ImageAnnotation annotate_image(std::string_view image_bytes, AnalyzerProvider& provider, std::int64_t t_ms,
                               const ImageTruth* truth);
std::vector<TranscriptRecord> transcribe(std::string_view wav, AnalyzerProvider& provider,
                                         std::int64_t chunk_t0_ms, const AudioTruth* truth);

}  // namespace fprig
