#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rppg/color.hpp"
#include "rppg/dataset.hpp"
#include "rppg/image.hpp"

namespace rppg {

struct BpmKnot {
  double t_s = 0.0;
  double bpm = 0.0;
};

// Piecewise-linear heart rate over time, held constant outside the knots.
class BpmTrace {
 public:
  BpmTrace() = default;
  explicit BpmTrace(std::vector<BpmKnot> knots);
  static BpmTrace constant(double bpm);
  static BpmTrace ramp(double from_bpm, double to_bpm, double duration_s);

  double at(double t_s) const;
  // Pulse phase in cycles: integral of bpm/60 from 0 to t_s, exact for the
  // piecewise-linear trace.
  double phase(double t_s) const;
  double min_bpm() const;
  double max_bpm() const;
  const std::vector<BpmKnot>& knots() const { return knots_; }

 private:
  std::vector<BpmKnot> knots_;
};

struct RectF {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;
};

enum class PatchShape { rectangle, ellipse };

struct Motion {
  enum class Kind { none, drift, sway };
  Kind kind = Kind::none;
  double vx = 0.0;  // drift, px/s
  double vy = 0.0;
  double amplitude_px = 0.0;  // sway, horizontal
  double period_s = 1.0;
};

struct Occlusion {
  double start_s = 0.0;
  double end_s = 0.0;
  RectF region;
};

struct SynthConfig {
  int width = 160;
  int height = 120;
  double fps = 30.0;
  double duration_s = 10.0;
  BpmTrace bpm = BpmTrace::constant(120.0);
  // Peak-to-peak luma modulation on the 0..255 scale.
  double pulse_amplitude = 2.0;
  PatchShape shape = PatchShape::ellipse;
  RectF patch{40.0, 24.0, 80.0, 72.0};
  Rgb8 skin{200, 150, 120};
  Rgb8 background{60, 80, 70};
  Rgb8 distractor{40, 90, 160};
  Motion motion;
  std::vector<Occlusion> occlusions;
  double noise_sigma = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
  int frame_count() const;
};

struct SynthClip {
  std::vector<RgbImage> frames;
  std::vector<HrSample> gt;
  SynthConfig config;
};

// Luma offset added to skin pixels at time t: amplitude/2 * sin(2 pi phase(t)).
double pulse_offset(const SynthConfig& config, double t_s);

// Top-left corner of the patch at time t after motion.
RectF patch_at(const SynthConfig& config, double t_s);

// One frame; noise comes from a substream keyed by (seed, index), so frames
// can be rendered in any order.
RgbImage render_frame(const SynthConfig& config, int index);

std::vector<HrSample> synth_ground_truth(const SynthConfig& config);

SynthClip generate(const SynthConfig& config);

// Writes frames, manifest and gt.csv in the frame-directory layout.
void write_clip(const SynthClip& clip, const std::filesystem::path& dir, const std::string& subject = "synth");

// Same layout, rendering frame by frame without holding the clip in memory.
void write_synthetic(const SynthConfig& config, const std::filesystem::path& dir,
                     const std::string& subject = "synth");

}  // namespace rppg
