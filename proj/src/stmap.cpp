#include "rppg/stmap.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "rppg/error.hpp"

namespace rppg {

void WindowingParams::validate() const {
  if (!(window_len_s > 0.0)) throw UsageError("window_len_s must be > 0");
  if (!(clip_len_s >= window_len_s)) throw UsageError("clip_len_s must be >= window_len_s");
  if (!(stride_s > 0.0)) throw UsageError("stride_s must be > 0");
}

int WindowingParams::window_frames(double fps) const {
  return std::max(1, static_cast<int>(std::lround(window_len_s * fps)));
}

int WindowingParams::stride_frames(double fps) const {
  return std::max(1, static_cast<int>(std::lround(stride_s * fps)));
}

int map_count(int n, int t, int s) {
  if (t < 1 || s < 1 || n < t) return 0;
  return (n - t) / s + 1;
}

std::vector<ClipRange> clip_ranges(int n_frames, double fps, const WindowingParams& params) {
  params.validate();
  if (!(fps > 0.0)) throw UsageError("fps must be > 0");
  const int window = params.window_frames(fps);
  std::vector<ClipRange> out;
  for (int i = 0;; ++i) {
    const int begin = static_cast<int>(std::lround(i * params.clip_len_s * fps));
    if (begin >= n_frames) break;
    const int end = std::min(n_frames, static_cast<int>(std::lround((i + 1) * params.clip_len_s * fps)));
    if (end - begin < window) break;
    out.push_back({i, begin, end});
  }
  return out;
}

std::vector<TraceMatrix> slice_clips(const TraceMatrix& trace, const WindowingParams& params) {
  if (trace.n == 0 || trace.k == 0) throw DataError("cannot slice an empty trace");
  std::vector<TraceMatrix> clips;
  for (const ClipRange& r : clip_ranges(trace.n, trace.fps, params)) {
    TraceMatrix clip(trace.k, r.frames(), trace.fps);
    for (int p = 0; p < trace.k; ++p) {
      for (int t = 0; t < r.frames(); ++t) {
        for (int c = 0; c < 3; ++c) clip.at(p, t, c) = trace.at(p, r.begin + t, c);
      }
    }
    clips.push_back(std::move(clip));
  }
  return clips;
}

void normalize_map(std::span<double> values, int k, int t) {
  if (values.size() != std::size_t(k) * t * 3) throw DataError("map size mismatch in normalize_map");
  for (int p = 0; p < k; ++p) {
    double* row = values.data() + std::size_t(p) * t * 3;
    for (int c = 0; c < 3; ++c) {
      double lo = row[c];
      double hi = row[c];
      for (int i = 1; i < t; ++i) {
        lo = std::min(lo, row[3 * i + c]);
        hi = std::max(hi, row[3 * i + c]);
      }
      const double range = hi - lo;
      for (int i = 0; i < t; ++i) {
        double& v = row[3 * i + c];
        v = range > 0.0 ? std::clamp((v - lo) / range, 0.0, 1.0) : 0.5;
      }
    }
  }
}

std::vector<SpatioTemporalMap> build_maps(const TraceMatrix& clip, const WindowingParams& params,
                                          const std::string& clip_id, double clip_start_s) {
  params.validate();
  clip.validate();
  const int t_len = params.window_frames(clip.fps);
  const int stride = params.stride_frames(clip.fps);
  const int m = map_count(clip.n, t_len, stride);
  if (m == 0) throw DataError("clip '" + clip_id + "' is shorter than one window");

  std::vector<SpatioTemporalMap> maps;
  maps.reserve(m);
  for (int j = 0; j < m; ++j) {
    SpatioTemporalMap map;
    map.k = clip.k;
    map.t = t_len;
    map.fps = clip.fps;
    map.clip_start_s = clip_start_s;
    map.window_start_s = (j * stride) / clip.fps;
    map.window_len_s = params.window_len_s;
    map.source_clip = clip_id;
    map.values.resize(std::size_t(clip.k) * t_len * 3);
    const int first = j * stride;
    for (int p = 0; p < clip.k; ++p) {
      const double* src = clip.values.data() + (std::size_t(p) * clip.n + first) * 3;
      std::copy(src, src + std::size_t(t_len) * 3, map.values.begin() + std::size_t(p) * t_len * 3);
    }
    normalize_map(map.values, map.k, map.t);
    maps.push_back(std::move(map));
  }
  return maps;
}

std::uint8_t quantize_unit(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

RgbImage map_to_image(const SpatioTemporalMap& map) {
  RgbImage img(map.t, map.k);
  for (int p = 0; p < map.k; ++p) {
    for (int i = 0; i < map.t; ++i) {
      img.set(i, p, {quantize_unit(map.at(p, i, 0)), quantize_unit(map.at(p, i, 1)), quantize_unit(map.at(p, i, 2))});
    }
  }
  return img;
}

void write_map(const SpatioTemporalMap& map, const std::filesystem::path& image_path,
               const std::filesystem::path& sidecar_path, std::optional<double> bpm) {
  write_png(map_to_image(map), image_path);
  nlohmann::ordered_json j;
  j["format"] = "rppg-stmap/1";
  j["clip_id"] = map.source_clip;
  j["clip_start_s"] = map.clip_start_s;
  j["window_start_s"] = map.window_start_s;
  j["window_len_s"] = map.window_len_s;
  j["fps"] = map.fps;
  j["k"] = map.k;
  j["t"] = map.t;
  j["bpm"] = bpm ? nlohmann::ordered_json(*bpm) : nlohmann::ordered_json(nullptr);
  std::ofstream out(sidecar_path);
  if (!out) throw DataError("cannot write map sidecar: " + sidecar_path.string());
  out << j.dump() << '\n';
}

SpatioTemporalMap read_map(const std::filesystem::path& image_path, const std::filesystem::path& sidecar_path,
                           MapSidecar* sidecar_out) {
  std::ifstream in(sidecar_path);
  if (!in) throw DataError("cannot open map sidecar: " + sidecar_path.string());
  std::string line;
  std::getline(in, line);
  MapSidecar meta;
  try {
    const auto j = nlohmann::json::parse(line);
    meta.clip_id = j.at("clip_id").get<std::string>();
    meta.clip_start_s = j.at("clip_start_s").get<double>();
    meta.window_start_s = j.at("window_start_s").get<double>();
    meta.window_len_s = j.at("window_len_s").get<double>();
    meta.fps = j.at("fps").get<double>();
    meta.k = j.at("k").get<int>();
    meta.t = j.at("t").get<int>();
    if (!j.at("bpm").is_null()) meta.bpm = j.at("bpm").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed map sidecar " + sidecar_path.string() + ": " + e.what());
  }
  const RgbImage img = read_png(image_path);
  if (img.width != meta.t || img.height != meta.k) {
    throw DataError("map image " + image_path.string() + " does not match its sidecar shape");
  }
  SpatioTemporalMap map;
  map.k = meta.k;
  map.t = meta.t;
  map.fps = meta.fps;
  map.clip_start_s = meta.clip_start_s;
  map.window_start_s = meta.window_start_s;
  map.window_len_s = meta.window_len_s;
  map.source_clip = meta.clip_id;
  map.values.resize(std::size_t(map.k) * map.t * 3);
  for (int p = 0; p < map.k; ++p) {
    for (int i = 0; i < map.t; ++i) {
      const Rgb8 c = img.at(i, p);
      map.at(p, i, 0) = c.r / 255.0;
      map.at(p, i, 1) = c.g / 255.0;
      map.at(p, i, 2) = c.b / 255.0;
    }
  }
  if (sidecar_out) *sidecar_out = meta;
  return map;
}

}  // namespace rppg
