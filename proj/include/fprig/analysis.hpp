#pragma once

// EEG band power, GSR normalization, cognition metrics and the arousal proxy.

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "fprig/session_model.hpp"

namespace fprig {

struct Band {
  std::string_view name;
  double f_low_hz;   // inclusive
  double f_high_hz;  // exclusive
};

inline constexpr std::array<Band, kBandCount> kBands{{
    {"theta", 4.0, 8.0},
    {"alpha", 8.0, 12.0},
    {"betaL", 12.0, 16.0},
    {"betaH", 16.0, 25.0},
    {"gamma", 25.0, 45.0},
}};

enum BandIndex : std::size_t { kTheta = 0, kAlpha, kBetaL, kBetaH, kGamma };

inline constexpr std::int64_t kDefaultEegRateHz = 128;
inline constexpr std::int64_t kGsrHistoryMs = 60000;

/// Hann-windowed periodogram band power of one 2 s window.
///
/// `frames` must hold exactly 2 * rate_hz frames. Per channel, the one-sided
/// spectrum is scaled so a sinusoid of amplitude A carries A^2/2 in total
/// (2|X_k|^2 / (N * sum w^2)), and each band sums the bins with
/// f_low <= k*fs/N < f_high. The record is stamped with the first frame's
/// t_ms. Throws Error(window) on a wrong frame count.
BandPowerRecord band_power(std::span<const EegFrame> frames, std::int64_t rate_hz = kDefaultEegRateHz);

// Band powers of a single real-valued channel; exposed for tests and tools.
BandArray channel_band_power(std::span<const double> samples, double rate_hz);

/// Min-max position of `current` inside the trailing 60 s of `history`
/// (the current sample included). Empty history or a flat window gives 0.5.
double normalize_gsr(std::span<const GsrSample> history, const GsrSample& current);

inline double squash(double x) { return x / (1.0 + x); }

CognitionRecord cognition_metrics(const BandPowerRecord& bp, double gsr_norm);

// 5 * mean(excitement, stress) - 2.5
double arousal_proxy(const CognitionRecord& c);

}  // namespace fprig
