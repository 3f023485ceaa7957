#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rppg/cnn.hpp"
#include "rppg/config.hpp"
#include "rppg/dataset.hpp"
#include "rppg/hr.hpp"
#include "rppg/stmap.hpp"

namespace rppg {

enum class EstimatorMode { spectral, cnn };

EstimatorMode parse_mode(const std::string& name);

struct ClipMaps {
  ClipRange range;
  double clip_start_s = 0.0;
  std::vector<SpatioTemporalMap> maps;
};

struct VideoMaps {
  std::string video_id;
  std::string subject;
  double fps = 0.0;
  std::vector<ClipMaps> clips;
};

// Frames -> per-clip temporal superpixels -> traces -> sliding-window maps.
// Each clip is segmented independently starting from a fresh seed grid.
ClipMaps clip_to_maps(const FrameDirectory& frames, const ClipRange& range, const std::string& video_id,
                      const PipelineConfig& config);

// Clips run on up to config.jobs threads; output order is clip order.
VideoMaps video_to_maps(const std::filesystem::path& dir, const PipelineConfig& config);

struct MapPrediction {
  std::string video;
  std::string subject;
  int clip = 0;
  int map = 0;
  double clip_start_s = 0.0;
  double window_start_s = 0.0;
  double window_len_s = 0.0;
  double bpm = 0.0;
};

struct ClipSummary {
  std::string video;
  std::string subject;
  int clip = 0;
  double clip_start_s = 0.0;
  int n_maps = 0;
  double bpm = 0.0;
};

struct VideoSummary {
  std::string video;
  std::string subject;
  int n_maps = 0;
  double bpm = 0.0;
};

struct PredictionSet {
  std::vector<MapPrediction> maps;
  std::vector<ClipSummary> clips;
  std::vector<VideoSummary> videos;
};

PredictionSet run_pipeline(const std::filesystem::path& input, EstimatorMode mode, const CnnModel* model,
                           const PipelineConfig& config);

// CSV with a "kind" column (map | clip | video); fixed 6-decimal formatting.
std::string format_predictions(const PredictionSet& set);
void write_predictions(const PredictionSet& set, const std::filesystem::path& file);
PredictionSet parse_predictions(const std::string& text);
PredictionSet read_predictions(const std::filesystem::path& file);

// Labels every predicted map from the ground truth under gt_root and reports
// map-level (headline) and clip-level errors.
MetricReport evaluate_predictions(const PredictionSet& set, const std::filesystem::path& gt_root);
std::string metrics_to_json(const MetricReport& report);
std::string metrics_table(const MetricReport& report);

struct TrainingData {
  std::vector<LabeledMap> samples;
  int dropped = 0;
  std::vector<std::string> subjects;
};

// Labeled maps from every video under root that has ground truth. With a
// split, only train-side subjects are used.
TrainingData collect_training_maps(const std::filesystem::path& root, const PipelineConfig& config,
                                   const std::optional<SplitSpec>& split);

TrainingResult run_training(const std::filesystem::path& root, const PipelineConfig& config,
                            const std::optional<SplitSpec>& split);

}  // namespace rppg
