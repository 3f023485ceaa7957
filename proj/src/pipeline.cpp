#include "rppg/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "rppg/error.hpp"
#include "rppg/spectral.hpp"
#include "rppg/superpixel.hpp"
#include "rppg/traces.hpp"

namespace fs = std::filesystem;

namespace rppg {
namespace {

// Runs task(i) for i in [0, n) on up to `jobs` threads; the first exception
// is rethrown after all threads finish.
template <class F>
void parallel_for(std::size_t n, int jobs, F&& task) {
  const std::size_t workers = std::min<std::size_t>(n, std::max(1, jobs));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          task(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(line);
  while (std::getline(ss, item, ',')) out.push_back(item);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

EstimatorMode parse_mode(const std::string& name) {
  if (name == "spectral") return EstimatorMode::spectral;
  if (name == "cnn") return EstimatorMode::cnn;
  throw UsageError("unknown mode '" + name + "' (expected spectral or cnn)");
}

ClipMaps clip_to_maps(const FrameDirectory& frames, const ClipRange& range, const std::string& video_id,
                      const PipelineConfig& config) {
  const double fps = frames.manifest().fps;
  TemporalSegmenter segmenter(config.segmentation);
  TraceAccumulator traces(config.segmentation.k);
  for (int i = range.begin; i < range.end; ++i) {
    const RgbImage image = downscale(frames.read(i), config.downscale);
    const FrameSegmentation& seg = segmenter.push(to_lab(image));
    traces.add_frame(image, seg.labels);
  }
  ClipMaps out;
  out.range = range;
  out.clip_start_s = range.begin / fps;
  out.maps = build_maps(traces.finish(fps), config.windowing, video_id + "/clip" + std::to_string(range.index),
                        out.clip_start_s);
  return out;
}

VideoMaps video_to_maps(const fs::path& dir, const PipelineConfig& config) {
  config.validate();
  const FrameDirectory frames(dir);
  VideoMaps out;
  out.video_id = dir.filename().string();
  if (out.video_id.empty()) out.video_id = dir.parent_path().filename().string();
  out.subject = frames.manifest().subject;
  out.fps = frames.manifest().fps;
  config.spectral.validate(out.fps);
  const std::vector<ClipRange> ranges = clip_ranges(frames.size(), out.fps, config.windowing);
  out.clips.resize(ranges.size());
  parallel_for(ranges.size(), config.jobs,
               [&](std::size_t i) { out.clips[i] = clip_to_maps(frames, ranges[i], out.video_id, config); });
  return out;
}

PredictionSet run_pipeline(const fs::path& input, EstimatorMode mode, const CnnModel* model,
                           const PipelineConfig& config) {
  if (mode == EstimatorMode::cnn && model == nullptr) throw UsageError("cnn mode requires a model checkpoint");
  PredictionSet set;
  for (const fs::path& dir : discover_videos(input)) {
    const VideoMaps video = video_to_maps(dir, config);
    double video_sum = 0.0;
    int video_maps = 0;
    for (const ClipMaps& clip : video.clips) {
      std::vector<double> bpm(clip.maps.size());
      parallel_for(clip.maps.size(), config.jobs, [&](std::size_t j) {
        bpm[j] = mode == EstimatorMode::spectral ? spectral_estimate(clip.maps[j], config.spectral)
                                                 : model->forward(clip.maps[j]);
      });
      for (std::size_t j = 0; j < clip.maps.size(); ++j) {
        const SpatioTemporalMap& m = clip.maps[j];
        set.maps.push_back({video.video_id, video.subject, clip.range.index, static_cast<int>(j), m.clip_start_s,
                            m.window_start_s, m.window_len_s, bpm[j]});
        video_sum += bpm[j];
        ++video_maps;
      }
      const ClipPrediction agg = aggregate_clip(bpm, clip.maps.front().source_clip);
      set.clips.push_back({video.video_id, video.subject, clip.range.index, clip.clip_start_s,
                           static_cast<int>(bpm.size()), agg.bpm});
    }
    if (video_maps > 0) set.videos.push_back({video.video_id, video.subject, video_maps, video_sum / video_maps});
  }
  if (set.maps.empty()) {
    char len[32];
    std::snprintf(len, sizeof len, "%g", config.windowing.window_len_s);
    throw DataError("no video under " + input.string() + " is long enough for one " + len + " s window");
  }
  return set;
}

std::string format_predictions(const PredictionSet& set) {
  std::string out = "kind,video,subject,clip,map,clip_start_s,window_start_s,window_len_s,n_maps,bpm\n";
  for (const MapPrediction& m : set.maps) {
    out += "map," + m.video + "," + m.subject + "," + std::to_string(m.clip) + "," + std::to_string(m.map) + "," +
           fmt6(m.clip_start_s) + "," + fmt6(m.window_start_s) + "," + fmt6(m.window_len_s) + ",1," + fmt6(m.bpm) +
           "\n";
  }
  for (const ClipSummary& c : set.clips) {
    out += "clip," + c.video + "," + c.subject + "," + std::to_string(c.clip) + ",," + fmt6(c.clip_start_s) + ",,," +
           std::to_string(c.n_maps) + "," + fmt6(c.bpm) + "\n";
  }
  for (const VideoSummary& v : set.videos) {
    out += "video," + v.video + "," + v.subject + ",,,,,," + std::to_string(v.n_maps) + "," + fmt6(v.bpm) + "\n";
  }
  return out;
}

void write_predictions(const PredictionSet& set, const fs::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw DataError("cannot write predictions: " + file.string());
  out << format_predictions(set);
  if (!out) throw DataError("failed writing predictions: " + file.string());
}

PredictionSet parse_predictions(const std::string& text) {
  PredictionSet set;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  const auto num = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw DataError("predictions line " + std::to_string(line_no) + ": bad number '" + s + "'");
    }
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line_no == 1) continue;
    const auto f = split_csv(line);
    if (f.size() != 10) throw DataError("predictions line " + std::to_string(line_no) + ": expected 10 fields");
    if (f[0] == "map") {
      set.maps.push_back({f[1], f[2], static_cast<int>(num(f[3])), static_cast<int>(num(f[4])), num(f[5]), num(f[6]),
                          num(f[7]), num(f[9])});
    } else if (f[0] == "clip") {
      set.clips.push_back({f[1], f[2], static_cast<int>(num(f[3])), num(f[5]), static_cast<int>(num(f[8])), num(f[9])});
    } else if (f[0] == "video") {
      set.videos.push_back({f[1], f[2], static_cast<int>(num(f[8])), num(f[9])});
    } else {
      throw DataError("predictions line " + std::to_string(line_no) + ": unknown kind '" + f[0] + "'");
    }
  }
  return set;
}

PredictionSet read_predictions(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DataError("cannot open predictions: " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_predictions(ss.str());
}

MetricReport evaluate_predictions(const PredictionSet& set, const fs::path& gt_root) {
  if (set.maps.empty()) throw DataError("prediction file holds no map predictions");
  std::map<std::string, std::vector<HrSample>> gt;
  for (const fs::path& dir : discover_videos(gt_root)) {
    const fs::path file = dir / kGroundTruthFile;
    if (fs::exists(file)) gt[dir.filename().string()] = load_ground_truth(file);
  }

  std::vector<double> pred;
  std::vector<double> truth;
  std::map<std::pair<std::string, int>, std::pair<std::vector<double>, std::vector<double>>> per_clip;
  for (const MapPrediction& m : set.maps) {
    const auto it = gt.find(m.video);
    if (it == gt.end()) continue;
    const auto label = window_label(it->second, m.clip_start_s + m.window_start_s, m.window_len_s);
    if (!label) continue;
    pred.push_back(m.bpm);
    truth.push_back(*label);
    auto& c = per_clip[{m.video, m.clip}];
    c.first.push_back(m.bpm);
    c.second.push_back(*label);
  }
  if (pred.size() != set.maps.size()) {
    throw DataError("map count mismatch: " + std::to_string(set.maps.size()) + " predicted maps but " +
                    std::to_string(pred.size()) + " have ground truth under " + gt_root.string());
  }

  MetricReport report = compute_metrics(pred, truth);
  std::vector<double> clip_pred;
  std::vector<double> clip_truth;
  for (const auto& [key, pt] : per_clip) {
    const MetricReport r = compute_metrics(pt.first, pt.second);
    report.per_clip.push_back({key.first, key.second, r.mae, r.rmse, r.n_maps});
    double sp = 0.0;
    double st = 0.0;
    for (std::size_t i = 0; i < pt.first.size(); ++i) {
      sp += pt.first[i];
      st += pt.second[i];
    }
    clip_pred.push_back(sp / double(pt.first.size()));
    clip_truth.push_back(st / double(pt.second.size()));
  }
  const MetricReport clips = compute_metrics(clip_pred, clip_truth);
  report.clip_mae = clips.mae;
  report.clip_rmse = clips.rmse;
  report.n_clips = clips.n_maps;
  return report;
}

std::string metrics_to_json(const MetricReport& r) {
  nlohmann::ordered_json j;
  j["mae"] = r.mae;
  j["rmse"] = r.rmse;
  j["n_maps"] = r.n_maps;
  j["clip_mae"] = r.clip_mae;
  j["clip_rmse"] = r.clip_rmse;
  j["n_clips"] = r.n_clips;
  auto& clips = j["per_clip"];
  clips = nlohmann::ordered_json::array();
  for (const ClipMetric& c : r.per_clip) {
    clips.push_back({{"video", c.video}, {"clip", c.clip}, {"mae", c.mae}, {"rmse", c.rmse}, {"n_maps", c.n_maps}});
  }
  return j.dump(2) + "\n";
}

std::string metrics_table(const MetricReport& r) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-24s %6s %9s %9s\n", "scope", "maps", "MAE", "RMSE");
  out += buf;
  std::snprintf(buf, sizeof buf, "%-24s %6d %9.3f %9.3f\n", "all maps", r.n_maps, r.mae, r.rmse);
  out += buf;
  std::snprintf(buf, sizeof buf, "%-24s %6d %9.3f %9.3f\n", "clip means", r.n_clips, r.clip_mae, r.clip_rmse);
  out += buf;
  for (const ClipMetric& c : r.per_clip) {
    const std::string name = c.video + "/clip" + std::to_string(c.clip);
    std::snprintf(buf, sizeof buf, "%-24s %6d %9.3f %9.3f\n", name.c_str(), c.n_maps, c.mae, c.rmse);
    out += buf;
  }
  return out;
}

TrainingData collect_training_maps(const fs::path& root, const PipelineConfig& config,
                                   const std::optional<SplitSpec>& split) {
  if (split) split->validate();
  TrainingData data;
  for (const fs::path& dir : discover_videos(root)) {
    const fs::path gt_file = dir / kGroundTruthFile;
    if (!fs::exists(gt_file)) continue;
    const Manifest manifest = read_manifest(dir / kManifestFile);
    if (split && !split->in_train(manifest.subject)) continue;
    const std::vector<HrSample> gt = load_ground_truth(gt_file);
    const VideoMaps video = video_to_maps(dir, config);
    for (const ClipMaps& clip : video.clips) {
      LabelingResult labeled = label_maps(clip.maps, gt);
      data.dropped += labeled.dropped;
      for (auto& s : labeled.labeled) data.samples.push_back(std::move(s));
    }
    data.subjects.push_back(manifest.subject);
  }
  if (data.samples.empty()) throw DataError("no labeled maps found under " + root.string() + " (missing gt.csv?)");
  return data;
}

TrainingResult run_training(const fs::path& root, const PipelineConfig& config,
                            const std::optional<SplitSpec>& split) {
  const TrainingData data = collect_training_maps(root, config, split);
  return cnn_train(data.samples, config.cnn, config.training);
}

}  // namespace rppg
