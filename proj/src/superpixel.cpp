#include "rppg/superpixel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rppg/error.hpp"
#include "rppg/simd/kernels.hpp"

namespace rppg {
namespace {

void check_seed_ids(std::span<const Seed> seeds) {
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (seeds[i].id != static_cast<int>(i)) {
      throw UsageError("seed ids must equal their index (seed " + std::to_string(i) + " has id " +
                       std::to_string(seeds[i].id) + ")");
    }
  }
}

void clamp_motion(std::vector<Seed>& seeds, std::span<const Seed> anchors, double max_move) {
  if (max_move <= 0.0) return;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    Seed& s = seeds[i];
    if (!s.alive) continue;
    const double dx = s.x - anchors[i].x;
    const double dy = s.y - anchors[i].y;
    const double dist = std::sqrt(dx * dx + dy * dy);
    if (dist > max_move) {
      const double scale = max_move / dist;
      s.x = anchors[i].x + dx * scale;
      s.y = anchors[i].y + dy * scale;
    }
  }
}

}  // namespace

void SegmentationParams::validate() const {
  if (k < 1) throw UsageError("k must be >= 1");
  if (!(compacity > 0.0)) throw UsageError("compacity must be > 0");
  if (max_iters < 1) throw UsageError("max_iters must be >= 1");
  if (initial_iters < 1) throw UsageError("initial_iters must be >= 1");
  if (!(convergence_eps >= 0.0)) throw UsageError("convergence_eps must be >= 0");
  if (!(search_radius_cells > 0.0)) throw UsageError("search_radius_cells must be > 0");
  if (!(max_motion_cells >= 0.0)) throw UsageError("max_motion_cells must be >= 0");
}

GridLayout grid_layout(int width, int height, int k) {
  if (width < 1 || height < 1) throw DataError("empty frame");
  if (k < 1) throw UsageError("k must be >= 1");
  if (static_cast<long long>(k) > static_cast<long long>(width) * height) {
    throw UsageError("over-segmentation request: k=" + std::to_string(k) + " exceeds pixel count " +
                     std::to_string(static_cast<long long>(width) * height));
  }
  const double aspect = std::sqrt(double(width) / double(height));
  const double root = std::sqrt(double(k));
  int cols = static_cast<int>(std::ceil(root * aspect - 1e-9));
  int rows = static_cast<int>(std::ceil(root / aspect - 1e-9));
  cols = std::clamp(cols, 1, std::min(width, k));
  rows = std::clamp(rows, 1, std::min(height, k));
  while (static_cast<long long>(cols) * rows < k) {
    if (rows < height) {
      ++rows;
    } else {
      ++cols;
    }
  }
  while (rows > 1 && static_cast<long long>(rows - 1) * cols >= k) --rows;

  GridLayout g;
  g.cols = cols;
  g.rows = rows;
  g.cell_w = double(width) / cols;
  g.cell_h = double(height) / rows;
  return g;
}

std::vector<Seed> init_seeds(const LabImage& frame, int k) {
  if (frame.empty()) throw DataError("cannot seed an empty frame");
  const GridLayout g = grid_layout(frame.width, frame.height, k);
  std::vector<Seed> seeds;
  seeds.reserve(k);
  for (int r = 0; r < g.rows; ++r) {
    for (int c = 0; c < g.cols; ++c) {
      const int id = r * g.cols + c;
      if (id >= k) break;
      Seed s;
      s.id = id;
      s.x = (c + 0.5) * g.cell_w;
      s.y = (r + 0.5) * g.cell_h;
      const int px = std::min(frame.width - 1, static_cast<int>(s.x));
      const int py = std::min(frame.height - 1, static_cast<int>(s.y));
      s.lab = frame.at(px, py);
      seeds.push_back(s);
    }
  }
  return seeds;
}

double total_distance(const PixelSample& p, const Seed& s, double compacity) {
  const double dx = p.x - s.x;
  const double dy = p.y - s.y;
  const double d_spatial = std::sqrt(dx * dx + dy * dy);
  const double theta = 1.0 / (compacity * compacity);
  return lab_distance(p.lab, s.lab) + theta * d_spatial;
}

LabelMap assign_pixels(const LabImage& frame, std::span<const Seed> seeds, const SegmentationParams& params) {
  check_seed_ids(seeds);
  if (std::none_of(seeds.begin(), seeds.end(), [](const Seed& s) { return s.alive; })) {
    throw UsageError("assign_pixels needs at least one live seed");
  }
  const int w = frame.width;
  const int h = frame.height;
  const GridLayout g = grid_layout(w, h, params.k);
  const double radius = params.search_radius_cells * g.cell_size();
  const double radius_sq = radius * radius;
  const double theta = params.theta();
  const auto& kern = simd::kernels();

  LabelMap out(w, h);
  std::vector<double> best(out.pixel_count(), std::numeric_limits<double>::infinity());

  for (const Seed& s : seeds) {
    if (!s.alive) continue;
    const simd::SeedPoint sp{s.lab.l, s.lab.a, s.lab.b, s.x, s.y};
    const int x0 = std::max(0, static_cast<int>(std::floor(s.x - radius - 0.5)));
    const int x1 = std::min(w, static_cast<int>(std::ceil(s.x + radius)) + 1);
    const int y0 = std::max(0, static_cast<int>(std::floor(s.y - radius - 0.5)));
    const int y1 = std::min(h, static_cast<int>(std::ceil(s.y + radius)) + 1);
    for (int y = y0; y < y1; ++y) {
      const std::size_t row = std::size_t(y) * w;
      kern.seed_row(frame.l.data() + row, frame.a.data() + row, frame.b.data() + row, x0, x1, y + 0.5, sp,
                    theta, radius_sq, s.id, best.data() + row, out.labels.data() + row);
    }
  }

  // Pixels no live seed could reach (dead neighbourhoods, clamped motion).
  constexpr double kUnbounded = std::numeric_limits<double>::infinity();
  for (int y = 0; y < h; ++y) {
    const std::size_t row = std::size_t(y) * w;
    for (int x = 0; x < w; ++x) {
      if (out.labels[row + x] != LabelMap::kUnassigned) continue;
      for (const Seed& s : seeds) {
        if (!s.alive) continue;
        const simd::SeedPoint sp{s.lab.l, s.lab.a, s.lab.b, s.x, s.y};
        kern.seed_row(frame.l.data() + row, frame.a.data() + row, frame.b.data() + row, x, x + 1, y + 0.5, sp,
                      theta, kUnbounded, s.id, best.data() + row, out.labels.data() + row);
      }
    }
  }
  return out;
}

std::vector<Seed> update_seeds(const LabImage& frame, const LabelMap& labels, std::span<const Seed> seeds) {
  check_seed_ids(seeds);
  struct Acc {
    double x = 0, y = 0, l = 0, a = 0, b = 0;
    std::size_t n = 0;
  };
  std::vector<Acc> acc(seeds.size());
  for (int y = 0; y < labels.height; ++y) {
    for (int x = 0; x < labels.width; ++x) {
      const std::size_t i = std::size_t(y) * labels.width + x;
      const std::int32_t id = labels.labels[i];
      if (id < 0 || static_cast<std::size_t>(id) >= seeds.size()) continue;
      Acc& s = acc[id];
      s.x += x + 0.5;
      s.y += y + 0.5;
      s.l += frame.l[i];
      s.a += frame.a[i];
      s.b += frame.b[i];
      ++s.n;
    }
  }
  std::vector<Seed> out(seeds.begin(), seeds.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Acc& s = acc[i];
    if (s.n == 0) {
      out[i].alive = false;
      continue;
    }
    const double inv = 1.0 / double(s.n);
    out[i].x = s.x * inv;
    out[i].y = s.y * inv;
    out[i].lab = {s.l * inv, s.a * inv, s.b * inv};
  }
  return out;
}

namespace {

// assign -> connectivity -> update until the labels repeat, the mean seed
// displacement drops below eps or the iteration budget runs out. When the
// labels repeat, the returned seeds are an exact fixed point.
FrameSegmentation iterate(const LabImage& frame, std::span<const Seed> seeds_in, const SegmentationParams& params,
                          int max_iters, double eps, double max_move) {
  FrameSegmentation result;
  std::vector<Seed> seeds(seeds_in.begin(), seeds_in.end());
  for (int it = 1; it <= max_iters; ++it) {
    LabelMap next = assign_pixels(frame, seeds, params);
    enforce_connectivity(frame, next, seeds);
    const bool unchanged = it > 1 && next == result.labels;
    result.labels = std::move(next);
    std::vector<Seed> updated = update_seeds(frame, result.labels, seeds);
    clamp_motion(updated, seeds_in, max_move);

    double moved = 0.0;
    std::size_t live = 0;
    for (std::size_t i = 0; i < updated.size(); ++i) {
      if (!updated[i].alive) continue;
      moved += std::hypot(updated[i].x - seeds[i].x, updated[i].y - seeds[i].y);
      ++live;
    }
    seeds = std::move(updated);
    result.iterations = it;
    if (unchanged || live == 0 || moved / double(live) < eps) break;
  }
  result.seeds = std::move(seeds);
  return result;
}

}  // namespace

FrameSegmentation segment_frame(const LabImage& frame, std::span<const Seed> seeds_in,
                                const SegmentationParams& params) {
  params.validate();
  if (seeds_in.empty()) throw UsageError("segment_frame needs a nonempty seed set");
  check_seed_ids(seeds_in);
  const GridLayout g = grid_layout(frame.width, frame.height, params.k);
  return iterate(frame, seeds_in, params, params.max_iters, params.convergence_eps,
                 params.max_motion_cells * g.cell_size());
}

FrameSegmentation initial_segmentation(const LabImage& frame, const SegmentationParams& params) {
  params.validate();
  const std::vector<Seed> seeds = init_seeds(frame, params.k);
  return iterate(frame, seeds, params, params.initial_iters, 0.0, 0.0);
}

TemporalSegmenter::TemporalSegmenter(SegmentationParams params, bool cold_start)
    : params_(params), cold_start_(cold_start) {
  params_.validate();
}

const FrameSegmentation& TemporalSegmenter::push(const LabImage& frame) {
  if (frame.empty()) throw DataError("empty frame in sequence");
  if (frames_ == 0) {
    width_ = frame.width;
    height_ = frame.height;
  } else if (frame.width != width_ || frame.height != height_) {
    throw DataError("frame dimension mismatch at frame " + std::to_string(frames_) + ": " +
                    std::to_string(frame.width) + "x" + std::to_string(frame.height) + " vs " +
                    std::to_string(width_) + "x" + std::to_string(height_));
  }
  if (cold_start_) {
    const std::vector<Seed> seeds = init_seeds(frame, params_.k);
    last_ = segment_frame(frame, seeds, params_);
  } else if (frames_ == 0) {
    last_ = initial_segmentation(frame, params_);
  } else {
    const std::vector<Seed> seeds = last_.seeds;
    last_ = segment_frame(frame, seeds, params_);
  }
  ++frames_;
  return last_;
}

std::vector<FrameSegmentation> propagate_and_segment(std::span<const LabImage> frames,
                                                     const SegmentationParams& params) {
  if (frames.empty()) throw UsageError("propagate_and_segment needs at least one frame");
  TemporalSegmenter segmenter(params);
  std::vector<FrameSegmentation> out;
  out.reserve(frames.size());
  for (const LabImage& f : frames) out.push_back(segmenter.push(f));
  return out;
}

LabelMap grid_labels(int width, int height, int k) {
  const GridLayout g = grid_layout(width, height, k);
  LabelMap out(width, height);
  for (int y = 0; y < height; ++y) {
    const int r = std::min(g.rows - 1, static_cast<int>((y + 0.5) / g.cell_h));
    for (int x = 0; x < width; ++x) {
      const int c = std::min(g.cols - 1, static_cast<int>((x + 0.5) / g.cell_w));
      int id = r * g.cols + c;
      if (id >= k) id -= g.cols;
      out.labels[std::size_t(y) * width + x] = id;
    }
  }
  return out;
}

}  // namespace rppg
