#include "rppg/hr.hpp"

#include <cmath>

#include "rppg/error.hpp"

namespace rppg {

ClipPrediction aggregate_clip(std::span<const double> per_map_bpm, std::string clip_id) {
  if (per_map_bpm.empty()) throw UsageError("cannot aggregate an empty prediction list");
  ClipPrediction out;
  out.clip_id = std::move(clip_id);
  out.per_map_bpm.assign(per_map_bpm.begin(), per_map_bpm.end());
  double sum = 0.0;
  for (const double v : per_map_bpm) {
    if (!std::isfinite(v)) throw DataError("non-finite per-map prediction");
    sum += v;
  }
  out.bpm = sum / double(per_map_bpm.size());
  return out;
}

}  // namespace rppg
