#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rppg/color.hpp"
#include "rppg/image.hpp"
#include "rppg/superpixel.hpp"

namespace rppg {

// Per-superpixel mean colour over time: k rows, n frames, 3 YUV channels.
// Element (p, t, c) lives at ((p * n) + t) * 3 + c.
struct TraceMatrix {
  int k = 0;
  int n = 0;
  double fps = 0.0;
  std::vector<double> values;

  TraceMatrix() = default;
  TraceMatrix(int rows, int frames, double rate)
      : k(rows), n(frames), fps(rate), values(std::size_t(rows) * frames * 3, 0.0) {}

  double& at(int p, int t, int c) { return values[(std::size_t(p) * n + t) * 3 + c]; }
  double at(int p, int t, int c) const { return values[(std::size_t(p) * n + t) * 3 + c]; }
  double duration_s() const { return fps > 0.0 ? n / fps : 0.0; }
  void validate() const;
};

// Builds a trace matrix frame by frame. A row with no pixels in some frame
// repeats its previous value (zeros before it was ever populated).
class TraceAccumulator {
 public:
  explicit TraceAccumulator(int k);

  void add_frame(const RgbImage& frame, const LabelMap& labels);
  TraceMatrix finish(double fps) const;
  int frames() const { return frames_; }

 private:
  int k_;
  int frames_ = 0;
  std::vector<Yuv> last_;
  std::vector<Yuv> columns_;  // frame-major while accumulating
};

TraceMatrix extract_traces(std::span<const RgbImage> frames, std::span<const LabelMap> labelmaps, int k,
                           double fps);

}  // namespace rppg
