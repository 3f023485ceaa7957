#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "rppg/cnn.hpp"
#include "rppg/rng.hpp"
#include "rppg/stmap.hpp"

namespace testing {

// Fresh scratch directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("rppg_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  static int& counter() {
    static int n = 0;
    return n;
  }
  std::filesystem::path path_;
};

// Normalized k x t map: about two thirds of the rows carry a pulse at `bpm`
// with random phase, amplitude, offset and drift, the rest are noise.
inline rppg::SpatioTemporalMap pulse_map(double bpm, int k, int t, double fps, std::mt19937_64& g) {
  rppg::SpatioTemporalMap m;
  m.k = k;
  m.t = t;
  m.fps = fps;
  m.window_len_s = t / fps;
  m.values.assign(std::size_t(k) * t * 3, 0.0);
  rppg::rng::Normal normal;
  const double f = bpm / 60.0;
  for (int p = 0; p < k; ++p) {
    const bool pulsatile = rppg::rng::uniform01(g) < 0.67;
    const double amp = pulsatile ? rppg::rng::uniform(g, 0.5, 2.0) : 0.0;
    const double phase = rppg::rng::uniform(g, 0.0, 2.0 * std::numbers::pi);
    const double drift = rppg::rng::uniform(g, -0.5, 0.5);
    const double base = rppg::rng::uniform(g, 60.0, 200.0);
    for (int i = 0; i < t; ++i) {
      const double s = amp * std::sin(2.0 * std::numbers::pi * f * i / fps + phase);
      const double trend = drift * i / t;
      m.at(p, i, 0) = base + s + trend + 0.5 * normal(g);
      m.at(p, i, 1) = -0.2 * s + 0.5 * normal(g);
      m.at(p, i, 2) = 0.3 * s + 0.5 * normal(g);
    }
  }
  rppg::normalize_map(m.values, k, t);
  return m;
}

inline std::vector<rppg::LabeledMap> pulse_dataset(int count, double lo_bpm, double hi_bpm, int k, int t,
                                                   double fps, std::uint64_t seed) {
  std::mt19937_64 g = rppg::rng::substream(seed, 0x5eed);
  std::vector<rppg::LabeledMap> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double bpm = rppg::rng::uniform(g, lo_bpm, hi_bpm);
    out.push_back({pulse_map(bpm, k, t, fps, g), bpm});
  }
  return out;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace testing
