#include "rppg/traces.hpp"

#include <cmath>
#include <string>

#include "rppg/error.hpp"

namespace rppg {

void TraceMatrix::validate() const {
  if (!(fps > 0.0)) throw DataError("trace fps must be > 0");
  if (values.size() != std::size_t(k) * n * 3) throw DataError("trace matrix size mismatch");
  for (const double v : values) {
    if (!std::isfinite(v)) throw DataError("trace matrix holds a non-finite value");
  }
}

TraceAccumulator::TraceAccumulator(int k) : k_(k), last_(std::size_t(k)) {
  if (k < 1) throw UsageError("trace accumulator needs k >= 1");
}

void TraceAccumulator::add_frame(const RgbImage& frame, const LabelMap& labels) {
  if (frame.width != labels.width || frame.height != labels.height) {
    throw DataError("label map does not match frame " + std::to_string(frames_));
  }
  std::vector<Rgb> sums(k_);
  std::vector<std::size_t> counts(k_, 0);
  for (std::size_t i = 0; i < labels.pixel_count(); ++i) {
    const std::int32_t id = labels.labels[i];
    if (id < 0 || id >= k_) continue;
    sums[id].r += frame.pixels[3 * i];
    sums[id].g += frame.pixels[3 * i + 1];
    sums[id].b += frame.pixels[3 * i + 2];
    ++counts[id];
  }
  for (int p = 0; p < k_; ++p) {
    if (counts[p] > 0) {
      const double inv = 1.0 / double(counts[p]);
      last_[p] = rgb_to_yuv(Rgb{sums[p].r * inv, sums[p].g * inv, sums[p].b * inv});
    }
    columns_.push_back(last_[p]);
  }
  ++frames_;
}

TraceMatrix TraceAccumulator::finish(double fps) const {
  TraceMatrix out(k_, frames_, fps);
  for (int t = 0; t < frames_; ++t) {
    for (int p = 0; p < k_; ++p) {
      const Yuv& c = columns_[std::size_t(t) * k_ + p];
      out.at(p, t, 0) = c.y;
      out.at(p, t, 1) = c.u;
      out.at(p, t, 2) = c.v;
    }
  }
  return out;
}

TraceMatrix extract_traces(std::span<const RgbImage> frames, std::span<const LabelMap> labelmaps, int k,
                           double fps) {
  if (frames.size() != labelmaps.size()) throw DataError("frames and label maps are not aligned");
  TraceAccumulator acc(k);
  for (std::size_t t = 0; t < frames.size(); ++t) acc.add_frame(frames[t], labelmaps[t]);
  return acc.finish(fps);
}

}  // namespace rppg
