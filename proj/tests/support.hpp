#pragma once

// Shared fixtures: scratch directories, deterministic attestors and the
// direct-DFT band power oracle.

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <span>
#include <string>

#include "fprig/analysis.hpp"
#include "fprig/crypto.hpp"
#include "fprig/error.hpp"
#include "fprig/ingest_service.hpp"
#include "fprig/integrity.hpp"
#include "fprig/sensor_sim.hpp"

namespace fprig::testing {

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("fprig-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Response = SHA-256 of (session, index, digest): stable across runs, so
// replayed sessions can be compared byte for byte.
class HashAttestor : public Attestor {
 public:
  std::string attest(const std::string& session_id, std::int64_t segment_index,
                     const std::string& file_digest) override {
    if (down) throw Error(ErrorCode::transport, "attestation service down");
    ++calls;
    return sha256_hex(session_id + "\n" + std::to_string(segment_index) + "\n" + file_digest);
  }
  bool down = false;
  int calls = 0;
};

// Plain DFT, no window, one-sided power 2|X_k|^2 / N^2 summed per band.
inline BandArray dft_band_power(std::span<const double> x, double fs) {
  const std::size_t n = x.size();
  BandArray out{};
  for (std::size_t k = 1; k < n / 2; ++k) {
    double re = 0, im = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double ph = 2.0 * std::numbers::pi * static_cast<double>(k * i % n) / static_cast<double>(n);
      re += x[i] * std::cos(ph);
      im -= x[i] * std::sin(ph);
    }
    const double p = 2.0 * (re * re + im * im) / (static_cast<double>(n) * static_cast<double>(n));
    const double f = static_cast<double>(k) * fs / static_cast<double>(n);
    for (std::size_t b = 0; b < kBandCount; ++b) {
      if (f >= kBands[b].f_low_hz && f < kBands[b].f_high_hz) out[b] += p;
    }
  }
  return out;
}

// Cognition formulas evaluated straight from their definition.
struct CognitionOracle {
  double excitement;
  double stress;
};
inline CognitionOracle cognition_oracle(const BandArray& b, double g) {
  constexpr double eps = 1e-12;
  auto sq = [](double x) { return x / (1.0 + x); };
  auto c01 = [](double x) { return x < 0 ? 0.0 : x > 1 ? 1.0 : x; };
  const double theta = b[0], alpha = b[1], betaH = b[3];
  return {c01(0.5 * sq(betaH / (alpha + eps)) + 0.5 * g), c01(0.5 * sq(betaH / (alpha + theta + eps)) + 0.5 * g)};
}

// Drives a scenario through the service in-process, 5 s at a time, and stops it.
inline SessionManifest record_scenario(IngestService& service, const Scenario& scenario) {
  service.start_session(scenario.config);
  for (std::int64_t t = 0; t < scenario.duration_ms; t += 5000) {
    service.ingest_batch(build_envelopes(scenario, t, std::min(t + 5000, scenario.duration_ms)));
  }
  return service.stop_session(scenario.config.session_id);
}

inline double elapsed_s(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

}  // namespace fprig::testing
