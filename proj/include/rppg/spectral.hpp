#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "rppg/stmap.hpp"

namespace rppg {

enum class Aggregator { snr_weighted_median, median, mean };

Aggregator parse_aggregator(std::string_view name);
std::string_view aggregator_name(Aggregator a);

struct SpectralParams {
  double band_lo_hz = 0.7;
  double band_hi_hz = 3.2;
  int zero_pad_factor = 4;
  Aggregator aggregator = Aggregator::snr_weighted_median;
  // 0 = Y (luma), 1 = U, 2 = V.
  int channel = 0;

  void validate(double fps) const;
};

struct RowEstimate {
  double freq_hz = 0.0;
  double snr = 0.0;
  bool valid = false;  // false for a flat row
};

// Detrend, Hann window, zero-pad, |FFT|, in-band peak with parabolic
// interpolation. SNR is the peak bin power over the in-band power outside
// +/-0.1 Hz of the peak.
RowEstimate estimate_row(std::span<const double> samples, double fps, const SpectralParams& params);

// Weighted median: smallest value whose cumulative weight reaches half.
double weighted_median(std::vector<std::pair<double, double>> value_weight);

// Heart rate in bpm from the selected channel of every row.
double spectral_estimate(std::span<const double> values, int k, int t, double fps, const SpectralParams& params);
double spectral_estimate(const SpatioTemporalMap& map, const SpectralParams& params);
double spectral_estimate(const TraceMatrix& trace, const SpectralParams& params);

}  // namespace rppg
