#include "rppg/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>

#include "rppg/error.hpp"

namespace rppg {
namespace {

constexpr double kPeakExclusionHz = 0.1;

// fftw planning is not thread-safe; execution on distinct buffers is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(int n) : n_(n) {
    in_ = fftw_alloc_real(n);
    out_ = fftw_alloc_complex(n / 2 + 1);
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(n, in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    {
      std::lock_guard<std::mutex> lock(planner_mutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* input() { return in_; }
  // Power spectrum |X_k|^2 for k in [0, n/2].
  void power(std::vector<double>& out) {
    fftw_execute(plan_);
    out.resize(n_ / 2 + 1);
    for (int k = 0; k <= n_ / 2; ++k) out[k] = out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1];
  }

 private:
  int n_;
  double* in_ = nullptr;
  fftw_complex* out_ = nullptr;
  fftw_plan plan_ = nullptr;
};

RealFft& fft_for(int n) {
  thread_local std::map<int, std::unique_ptr<RealFft>> cache;
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<RealFft>(n);
  return *slot;
}

}  // namespace

Aggregator parse_aggregator(std::string_view name) {
  if (name == "snr_weighted_median") return Aggregator::snr_weighted_median;
  if (name == "median") return Aggregator::median;
  if (name == "mean") return Aggregator::mean;
  throw UsageError("unknown aggregator '" + std::string(name) + "' (expected snr_weighted_median, median or mean)");
}

std::string_view aggregator_name(Aggregator a) {
  switch (a) {
    case Aggregator::snr_weighted_median:
      return "snr_weighted_median";
    case Aggregator::median:
      return "median";
    case Aggregator::mean:
      return "mean";
  }
  return "unknown";
}

void SpectralParams::validate(double fps) const {
  if (!(band_lo_hz > 0.0) || !(band_hi_hz > band_lo_hz)) {
    throw UsageError("spectral band must satisfy 0 < band_lo_hz < band_hi_hz");
  }
  if (!(band_hi_hz < fps / 2.0)) {
    throw UsageError("spectral band upper edge " + std::to_string(band_hi_hz) + " Hz is outside Nyquist (" +
                     std::to_string(fps / 2.0) + " Hz)");
  }
  if (zero_pad_factor < 1) throw UsageError("zero_pad_factor must be >= 1");
  if (channel < 0 || channel > 2) throw UsageError("spectral channel must be 0, 1 or 2");
}

RowEstimate estimate_row(std::span<const double> samples, double fps, const SpectralParams& params) {
  const int t = static_cast<int>(samples.size());
  RowEstimate est;
  if (t < 3) return est;
  const auto [min_it, max_it] = std::minmax_element(samples.begin(), samples.end());
  if (!(*max_it > *min_it)) return est;

  // Least-squares line through (i, x_i), i centred on zero.
  const double mid = (t - 1) / 2.0;
  double mean = 0.0;
  for (const double v : samples) mean += v;
  mean /= t;
  double sxy = 0.0;
  double sxx = 0.0;
  for (int i = 0; i < t; ++i) {
    sxy += (i - mid) * (samples[i] - mean);
    sxx += (i - mid) * (i - mid);
  }
  const double slope = sxy / sxx;

  const int n = t * params.zero_pad_factor;
  RealFft& fft = fft_for(n);
  double* in = fft.input();
  double energy = 0.0;
  for (int i = 0; i < t; ++i) {
    const double hann = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / (t - 1));
    in[i] = (samples[i] - mean - slope * (i - mid)) * hann;
    energy += in[i] * in[i];
  }
  std::fill(in + t, in + n, 0.0);
  if (!(energy > 0.0)) return est;

  std::vector<double> power;
  fft.power(power);

  const double df = fps / n;
  const int lo = std::max(1, static_cast<int>(std::ceil(params.band_lo_hz / df)));
  const int hi = std::min(n / 2, static_cast<int>(std::floor(params.band_hi_hz / df)));
  if (lo > hi) return est;

  int peak = lo;
  for (int k = lo + 1; k <= hi; ++k) {
    if (power[k] > power[peak]) peak = k;
  }
  if (!(power[peak] > 0.0)) return est;

  // Parabolic interpolation on magnitude.
  double offset = 0.0;
  if (peak > 0 && peak < n / 2) {
    const double a = std::sqrt(power[peak - 1]);
    const double b = std::sqrt(power[peak]);
    const double c = std::sqrt(power[peak + 1]);
    const double denom = a - 2.0 * b + c;
    if (denom < 0.0) offset = std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
  }
  est.freq_hz = std::clamp((peak + offset) * df, params.band_lo_hz, params.band_hi_hz);

  double noise = 0.0;
  for (int k = lo; k <= hi; ++k) {
    if (std::abs(k - peak) * df > kPeakExclusionHz) noise += power[k];
  }
  est.snr = noise > 0.0 ? power[peak] / noise : 1e12;
  est.valid = true;
  return est;
}

double weighted_median(std::vector<std::pair<double, double>> value_weight) {
  if (value_weight.empty()) throw UsageError("weighted median of an empty set");
  std::sort(value_weight.begin(), value_weight.end());
  double total = 0.0;
  for (const auto& [v, w] : value_weight) total += w;
  if (!(total > 0.0)) {
    for (auto& vw : value_weight) vw.second = 1.0;
    total = double(value_weight.size());
  }
  double cum = 0.0;
  for (const auto& [v, w] : value_weight) {
    cum += w;
    if (cum >= 0.5 * total) return v;
  }
  return value_weight.back().first;
}

double spectral_estimate(std::span<const double> values, int k, int t, double fps, const SpectralParams& params) {
  params.validate(fps);
  if (values.size() != std::size_t(k) * t * 3) throw DataError("spectral input size mismatch");

  std::vector<double> row(t);
  std::vector<std::pair<double, double>> estimates;
  for (int p = 0; p < k; ++p) {
    for (int i = 0; i < t; ++i) row[i] = values[(std::size_t(p) * t + i) * 3 + params.channel];
    const RowEstimate e = estimate_row(row, fps, params);
    if (e.valid) estimates.emplace_back(e.freq_hz, e.snr);
  }
  if (estimates.empty()) throw DataError("no pulsatile signal: every row is flat");

  double f = 0.0;
  switch (params.aggregator) {
    case Aggregator::snr_weighted_median:
      f = weighted_median(std::move(estimates));
      break;
    case Aggregator::median: {
      for (auto& e : estimates) e.second = 1.0;
      f = weighted_median(std::move(estimates));
      break;
    }
    case Aggregator::mean: {
      for (const auto& e : estimates) f += e.first;
      f /= double(estimates.size());
      break;
    }
  }
  return 60.0 * f;
}

double spectral_estimate(const SpatioTemporalMap& map, const SpectralParams& params) {
  return spectral_estimate(map.values, map.k, map.t, map.fps, params);
}

double spectral_estimate(const TraceMatrix& trace, const SpectralParams& params) {
  return spectral_estimate(trace.values, trace.k, trace.n, trace.fps, params);
}

}  // namespace rppg
