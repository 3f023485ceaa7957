#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rppg/color.hpp"
#include "rppg/image.hpp"

namespace rppg {

// A superpixel centre. Coordinates are in pixel units with pixel (i, j)
// centred at (i + 0.5, j + 0.5).
struct Seed {
  int id = 0;
  double x = 0.0;
  double y = 0.0;
  Lab lab;
  bool alive = true;
};

struct LabelMap {
  static constexpr std::int32_t kUnassigned = -1;

  int width = 0;
  int height = 0;
  std::vector<std::int32_t> labels;

  LabelMap() = default;
  LabelMap(int w, int h) : width(w), height(h), labels(std::size_t(w) * h, kUnassigned) {}

  std::int32_t at(int x, int y) const { return labels[std::size_t(y) * width + x]; }
  std::size_t pixel_count() const { return labels.size(); }

  friend bool operator==(const LabelMap&, const LabelMap&) = default;
};

struct SegmentationParams {
  int k = 300;
  // Compacity c; the spatial weight is 1/c^2.
  double compacity = 1.0;
  int max_iters = 5;
  // Budget for the first frame of a sequence, which iterates until the labels
  // stop changing.
  int initial_iters = 50;
  // Mean live-seed displacement (pixels) below which iteration stops.
  double convergence_eps = 0.5;
  // Locality radius for the seed search, in grid cells.
  double search_radius_cells = 2.0;
  // Per-frame seed displacement clamp, in grid cells; 0 disables.
  double max_motion_cells = 1.0;

  double theta() const { return 1.0 / (compacity * compacity); }
  void validate() const;
};

// Seed grid geometry for a w x h frame and k seeds.
struct GridLayout {
  int cols = 0;
  int rows = 0;
  double cell_w = 0.0;
  double cell_h = 0.0;
  double cell_size() const { return cell_w > cell_h ? cell_w : cell_h; }
};

GridLayout grid_layout(int width, int height, int k);

// Seeds at grid cell centres, ids in row-major order. The last row is
// truncated so exactly k seeds are returned.
std::vector<Seed> init_seeds(const LabImage& frame, int k);

struct PixelSample {
  double x = 0.0;
  double y = 0.0;
  Lab lab;
};

// D_lab + (1/c^2) * D_spatial, both Euclidean.
double total_distance(const PixelSample& p, const Seed& s, double compacity);

// Labels every pixel with the live seed of minimum total distance among those
// within the locality radius (ties: lowest id). Pixels with no live seed in
// range fall back to all live seeds.
LabelMap assign_pixels(const LabImage& frame, std::span<const Seed> seeds, const SegmentationParams& params);

// Moves every live seed to the mean position/colour of its pixels; seeds that
// received no pixels are marked dead and keep their last state.
std::vector<Seed> update_seeds(const LabImage& frame, const LabelMap& labels, std::span<const Seed> seeds);

// Reassigns every non-largest 4-connected component of each label to the
// adjacent label whose seed colour is closest to the component mean.
void enforce_connectivity(const LabImage& frame, LabelMap& labels, std::span<const Seed> seeds);

bool is_four_connected(const LabelMap& labels);

struct FrameSegmentation {
  LabelMap labels;
  std::vector<Seed> seeds;
  int iterations = 0;
};

FrameSegmentation segment_frame(const LabImage& frame, std::span<const Seed> seeds_in,
                                const SegmentationParams& params);
// Grid seeds iterated to a fixed point (or initial_iters), without the motion
// clamp.
FrameSegmentation initial_segmentation(const LabImage& frame, const SegmentationParams& params);

// Streaming temporal segmentation. The first frame is seeded from the grid;
// later frames warm-start from the previous frame's seeds unless cold_start
// is set, in which case every frame is re-seeded from the grid.
class TemporalSegmenter {
 public:
  explicit TemporalSegmenter(SegmentationParams params, bool cold_start = false);

  const FrameSegmentation& push(const LabImage& frame);

  int frames_seen() const { return frames_; }
  const FrameSegmentation& last() const { return last_; }

 private:
  SegmentationParams params_;
  bool cold_start_;
  int frames_ = 0;
  int width_ = 0;
  int height_ = 0;
  FrameSegmentation last_;
};

std::vector<FrameSegmentation> propagate_and_segment(std::span<const LabImage> frames,
                                                     const SegmentationParams& params);

// Fixed-block labelling with no iteration (benchmark baseline).
LabelMap grid_labels(int width, int height, int k);

}  // namespace rppg
