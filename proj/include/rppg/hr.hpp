#pragma once

#include <span>
#include <string>
#include <vector>

#include "rppg/cnn.hpp"
#include "rppg/spectral.hpp"

namespace rppg {

struct ClipPrediction {
  std::string clip_id;
  std::vector<double> per_map_bpm;
  double bpm = 0.0;  // arithmetic mean of per_map_bpm
};

ClipPrediction aggregate_clip(std::span<const double> per_map_bpm, std::string clip_id = {});

}  // namespace rppg
