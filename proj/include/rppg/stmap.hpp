#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rppg/traces.hpp"

namespace rppg {

struct WindowingParams {
  double clip_len_s = 60.0;
  double window_len_s = 10.0;
  double stride_s = 0.5;

  void validate() const;
  int window_frames(double fps) const;  // T
  int stride_frames(double fps) const;  // S
};

// Frame range [begin, end) of one clip within a video.
struct ClipRange {
  int index = 0;
  int begin = 0;
  int end = 0;
  int frames() const { return end - begin; }
};

// Non-overlapping clips of clip_len_s; boundaries at round(i * clip_len_s * fps).
// A trailing remainder is kept only if it holds at least one window.
std::vector<ClipRange> clip_ranges(int n_frames, double fps, const WindowingParams& params);

std::vector<TraceMatrix> slice_clips(const TraceMatrix& trace, const WindowingParams& params);

// floor((n - t) / s) + 1 for n >= t, else 0.
int map_count(int n, int t, int s);

// K x T x 3 map; element (p, t, c) at ((p * t_len) + t) * 3 + c.
struct SpatioTemporalMap {
  int k = 0;
  int t = 0;
  std::vector<double> values;
  double fps = 0.0;
  double clip_start_s = 0.0;    // clip offset within the video
  double window_start_s = 0.0;  // window offset within the clip
  double window_len_s = 0.0;
  std::string source_clip;

  double& at(int p, int i, int c) { return values[(std::size_t(p) * t + i) * 3 + c]; }
  double at(int p, int i, int c) const { return values[(std::size_t(p) * t + i) * 3 + c]; }
  double video_start_s() const { return clip_start_s + window_start_s; }
};

// Per row and channel min-max scaling to [0, 1]; constant series become 0.5.
void normalize_map(std::span<double> values, int k, int t);

std::vector<SpatioTemporalMap> build_maps(const TraceMatrix& clip, const WindowingParams& params,
                                          const std::string& clip_id = {}, double clip_start_s = 0.0);

// Lossless PNG, K rows by T columns, (Y, U, V) stored in (R, G, B) as
// round(v * 255), plus a one-line JSON sidecar.
struct MapSidecar {
  std::string clip_id;
  double clip_start_s = 0.0;
  double window_start_s = 0.0;
  double window_len_s = 0.0;
  double fps = 0.0;
  int k = 0;
  int t = 0;
  std::optional<double> bpm;
};

std::uint8_t quantize_unit(double v);
RgbImage map_to_image(const SpatioTemporalMap& map);
void write_map(const SpatioTemporalMap& map, const std::filesystem::path& image_path,
               const std::filesystem::path& sidecar_path, std::optional<double> bpm = std::nullopt);
SpatioTemporalMap read_map(const std::filesystem::path& image_path, const std::filesystem::path& sidecar_path,
                           MapSidecar* sidecar_out = nullptr);

}  // namespace rppg
