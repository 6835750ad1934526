#include "fprig/analysis.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "fprig/error.hpp"

namespace fprig {

namespace {

constexpr double kEpsilon = 1e-12;

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

// Plans are created once per transform size; fftw planning is not
// thread-safe but fftw_execute_dft_r2c on a shared plan is.
class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    double* in = fftw_alloc_real(n);
    fftw_complex* out = fftw_alloc_complex(n / 2 + 1);
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(in);
    fftw_free(out);
  }
  ~RealFft() { fftw_destroy_plan(plan_); }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  // |X_k|^2 for k = 0..n/2
  std::vector<double> power(std::vector<double>& input) const {
    std::vector<fftw_complex> out(n_ / 2 + 1);
    fftw_execute_dft_r2c(plan_, input.data(), out.data());
    std::vector<double> p(out.size());
    for (std::size_t k = 0; k < out.size(); ++k) p[k] = out[k][0] * out[k][0] + out[k][1] * out[k][1];
    return p;
  }

 private:
  std::size_t n_;
  fftw_plan plan_;
};

const RealFft& fft_for(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, std::unique_ptr<RealFft>> plans;
  std::lock_guard lock(mu);
  auto& slot = plans[n];
  if (!slot) slot = std::make_unique<RealFft>(n);
  return *slot;
}

}  // namespace

BandArray channel_band_power(std::span<const double> samples, double rate_hz) {
  const std::size_t n = samples.size();
  if (n < 2) throw Error(ErrorCode::window, "window needs at least 2 samples");
  std::vector<double> x(n);
  double wsum2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    // periodic Hann
    double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
    x[i] = w * samples[i];
    wsum2 += w * w;
  }
  auto p = fft_for(n).power(x);
  BandArray out{};
  const double df = rate_hz / static_cast<double>(n);
  for (std::size_t k = 1; k < p.size(); ++k) {
    double f = static_cast<double>(k) * df;
    bool nyquist = (n % 2 == 0) && k == n / 2;
    double scaled = (nyquist ? 1.0 : 2.0) * p[k] / (static_cast<double>(n) * wsum2);
    for (std::size_t b = 0; b < kBandCount; ++b) {
      if (f >= kBands[b].f_low_hz && f < kBands[b].f_high_hz) out[b] += scaled;
    }
  }
  return out;
}

BandPowerRecord band_power(std::span<const EegFrame> frames, std::int64_t rate_hz) {
  const auto expected = static_cast<std::size_t>(2 * rate_hz);
  if (frames.size() != expected) {
    throw Error(ErrorCode::window, "band_power needs exactly " + std::to_string(expected) + " frames, got " +
                                       std::to_string(frames.size()));
  }
  BandPowerRecord rec;
  rec.t_ms = frames.front().t_ms;
  rec.per_channel.resize(kEegChannels);
  std::vector<double> samples(frames.size());
  for (std::size_t c = 0; c < kEegChannels; ++c) {
    for (std::size_t i = 0; i < frames.size(); ++i) {
      if (frames[i].channels.size() != kEegChannels) {
        throw Error(ErrorCode::window, "frame with " + std::to_string(frames[i].channels.size()) + " channels");
      }
      samples[i] = frames[i].channels[c];
    }
    rec.per_channel[c] = channel_band_power(samples, static_cast<double>(rate_hz));
  }
  for (std::size_t b = 0; b < kBandCount; ++b) {
    double sum = 0.0;
    for (const auto& ch : rec.per_channel) sum += ch[b];
    rec.avg[b] = sum / static_cast<double>(kEegChannels);
  }
  return rec;
}

double normalize_gsr(std::span<const GsrSample> history, const GsrSample& current) {
  double lo = current.value;
  double hi = current.value;
  bool any = false;
  for (const auto& s : history) {
    if (s.t_ms > current.t_ms || s.t_ms < current.t_ms - kGsrHistoryMs) continue;
    any = true;
    lo = std::min(lo, s.value);
    hi = std::max(hi, s.value);
  }
  if (!any || hi - lo <= 0.0) return 0.5;
  return clamp01((current.value - lo) / (hi - lo));
}

CognitionRecord cognition_metrics(const BandPowerRecord& bp, double g) {
  const double theta = bp.avg[kTheta];
  const double alpha = bp.avg[kAlpha];
  const double beta_l = bp.avg[kBetaL];
  const double beta_h = bp.avg[kBetaH];
  g = clamp01(g);
  CognitionRecord c;
  c.t_ms = bp.t_ms;
  c.engagement = clamp01(squash((beta_l + beta_h) / (alpha + theta + kEpsilon)));
  c.relaxation = clamp01(squash(alpha / (beta_l + beta_h + kEpsilon)));
  c.interest = clamp01(squash(beta_l / (alpha + kEpsilon)));
  c.focus = clamp01(squash(beta_l / (theta + kEpsilon)));
  c.excitement = clamp01(0.5 * squash(beta_h / (alpha + kEpsilon)) + 0.5 * g);
  c.stress = clamp01(0.5 * squash(beta_h / (alpha + theta + kEpsilon)) + 0.5 * g);
  return c;
}

double arousal_proxy(const CognitionRecord& c) {
  double a = 5.0 * ((c.excitement + c.stress) / 2.0) - 2.5;
  return std::clamp(a, -2.5, 2.5);
}

}  // namespace fprig
