#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rppg/cnn.hpp"
#include "rppg/image.hpp"
#include "rppg/stmap.hpp"

namespace rppg {

// Frame directory layout:
//   <dir>/manifest      key = value lines: fps, subject, frames (optional), notes (optional)
//   <dir>/000000.png    zero-padded frame index, lossless 8-bit RGB
//   <dir>/gt.csv        optional ground truth, one "t_s,bpm" per line, no header
inline constexpr const char* kManifestFile = "manifest";
inline constexpr const char* kGroundTruthFile = "gt.csv";

struct HrSample {
  int t_s = 0;
  double bpm = 0.0;
  friend bool operator==(const HrSample&, const HrSample&) = default;
};

inline constexpr double kMinBpm = 30.0;
inline constexpr double kMaxBpm = 250.0;

struct Manifest {
  double fps = 0.0;
  std::string subject;
  int frames = -1;  // -1 when not declared
  std::string notes;
};

Manifest read_manifest(const std::filesystem::path& file);
void write_manifest(const Manifest& manifest, const std::filesystem::path& file);

std::string frame_filename(int index);

// Validated view of a frame directory; frames are decoded on demand.
class FrameDirectory {
 public:
  explicit FrameDirectory(std::filesystem::path dir);

  const std::filesystem::path& path() const { return dir_; }
  const Manifest& manifest() const { return manifest_; }
  int size() const { return count_; }
  RgbImage read(int index) const;

 private:
  std::filesystem::path dir_;
  Manifest manifest_;
  int count_ = 0;
};

struct FrameSequence {
  std::vector<RgbImage> frames;
  double fps = 0.0;
  std::string subject;
};

FrameSequence load_frames(const std::filesystem::path& dir);

std::vector<HrSample> parse_ground_truth(std::istream& in, const std::string& source = "<stream>");
std::vector<HrSample> load_ground_truth(const std::filesystem::path& file);
void write_ground_truth(std::span<const HrSample> gt, const std::filesystem::path& file);

// Mean bpm over the integer seconds in [start_s, start_s + len_s); nullopt if
// any of those seconds is missing.
std::optional<double> window_label(std::span<const HrSample> gt, double start_s, double len_s);

struct LabelingResult {
  std::vector<LabeledMap> labeled;
  int dropped = 0;
};

// Windows are placed on the video timeline via map.video_start_s().
LabelingResult label_maps(std::vector<SpatioTemporalMap> maps, std::span<const HrSample> gt);

struct SplitSpec {
  std::vector<std::string> train;
  std::vector<std::string> test;

  void validate() const;
  bool in_train(const std::string& subject) const;
  bool in_test(const std::string& subject) const;
};

// Lines "train: a b c" and "test: d e"; ids separated by spaces or commas.
SplitSpec parse_split(std::istream& in);
SplitSpec load_split(const std::filesystem::path& file);

struct ClipMetric {
  std::string video;
  int clip = 0;
  double mae = 0.0;
  double rmse = 0.0;
  int n_maps = 0;
};

struct MetricReport {
  double mae = 0.0;
  double rmse = 0.0;
  int n_maps = 0;
  std::vector<ClipMetric> per_clip;
  // Clip-level errors (clip mean prediction vs clip mean label).
  double clip_mae = 0.0;
  double clip_rmse = 0.0;
  int n_clips = 0;
};

MetricReport compute_metrics(std::span<const double> pred, std::span<const double> truth);

// A directory with a manifest is one video; otherwise every immediate
// subdirectory holding a manifest, sorted by name.
std::vector<std::filesystem::path> discover_videos(const std::filesystem::path& root);

}  // namespace rppg
