#include "rppg/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>

#include "rppg/dataset.hpp"
#include "rppg/error.hpp"
#include "rppg/superpixel.hpp"

namespace rppg {
namespace {

double stability(const LabelMap& prev, const LabelMap& cur) {
  std::size_t same = 0;
  for (std::size_t i = 0; i < cur.pixel_count(); ++i) same += prev.labels[i] == cur.labels[i];
  return double(same) / double(cur.pixel_count());
}

// One pass over the frames. Returns elapsed seconds; fills stability if asked.
double run_once(std::span<const LabImage> frames, BenchMethod method, const PipelineConfig& config,
                double* label_stability) {
  const auto start = std::chrono::steady_clock::now();
  double stab_sum = 0.0;
  LabelMap prev;
  if (method == BenchMethod::grid) {
    for (std::size_t t = 0; t < frames.size(); ++t) {
      LabelMap labels = grid_labels(frames[t].width, frames[t].height, config.segmentation.k);
      if (t > 0) stab_sum += stability(prev, labels);
      prev = std::move(labels);
    }
  } else {
    TemporalSegmenter segmenter(config.segmentation, method == BenchMethod::ibis_cold);
    for (std::size_t t = 0; t < frames.size(); ++t) {
      const FrameSegmentation& seg = segmenter.push(frames[t]);
      if (label_stability) {
        if (t > 0) stab_sum += stability(prev, seg.labels);
        prev = seg.labels;
      }
    }
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (label_stability) *label_stability = frames.size() > 1 ? stab_sum / double(frames.size() - 1) : 1.0;
  return elapsed;
}

}  // namespace

BenchMethod parse_bench_method(const std::string& name) {
  if (name == "ibis_warm") return BenchMethod::ibis_warm;
  if (name == "ibis_cold") return BenchMethod::ibis_cold;
  if (name == "grid") return BenchMethod::grid;
  throw UsageError("unknown bench method '" + name + "' (expected ibis_warm, ibis_cold or grid)");
}

std::string bench_method_name(BenchMethod m) {
  switch (m) {
    case BenchMethod::ibis_warm:
      return "ibis_warm";
    case BenchMethod::ibis_cold:
      return "ibis_cold";
    case BenchMethod::grid:
      return "grid";
  }
  return "unknown";
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::vector<BenchRow> bench_methods(std::span<const RgbImage> frames, std::span<const BenchMethod> methods,
                                    const PipelineConfig& config, int repetitions) {
  if (frames.empty()) throw DataError("bench needs at least one frame");
  if (methods.empty()) throw UsageError("bench needs at least one method");
  if (repetitions < 1) throw UsageError("bench repetitions must be >= 1");
  config.validate();
  std::vector<LabImage> lab;
  lab.reserve(frames.size());
  for (const RgbImage& f : frames) lab.push_back(to_lab(f));

  std::vector<BenchRow> rows;
  for (const BenchMethod m : methods) {
    BenchRow row;
    row.method = bench_method_name(m);
    row.frames = static_cast<int>(frames.size());
    row.repetitions = repetitions;
    // Stability is a deterministic property of the output; measure it on an
    // untimed pass so bookkeeping stays out of the timings.
    run_once(lab, m, config, &row.label_stability);
    rows.push_back(std::move(row));
  }
  // Repetitions rotate through the methods so slow drifts in machine speed
  // hit every method alike.
  for (int r = 0; r < repetitions; ++r) {
    for (std::size_t i = 0; i < methods.size(); ++i) {
      const double secs = run_once(lab, methods[i], config, nullptr);
      rows[i].fps_runs.push_back(secs > 0.0 ? double(frames.size()) / secs : 0.0);
    }
  }
  for (BenchRow& row : rows) row.median_fps = median(row.fps_runs);
  return rows;
}

BenchRow bench_method(std::span<const RgbImage> frames, BenchMethod method, const PipelineConfig& config,
                      int repetitions) {
  return bench_methods(frames, std::span<const BenchMethod>(&method, 1), config, repetitions).front();
}

std::vector<BenchRow> run_bench(const std::filesystem::path& dir, const std::vector<std::string>& methods,
                                const PipelineConfig& config, int repetitions) {
  std::vector<BenchMethod> parsed;
  for (const auto& m : methods) parsed.push_back(parse_bench_method(m));
  const FrameDirectory fd(dir);
  std::vector<RgbImage> frames;
  frames.reserve(fd.size());
  for (int i = 0; i < fd.size(); ++i) frames.push_back(downscale(fd.read(i), config.downscale));
  return bench_methods(frames, parsed, config, repetitions);
}

std::string format_bench(const std::vector<BenchRow>& rows) {
  std::string out = "method,frames,repetitions,median_fps,label_stability\n";
  char buf[256];
  for (const BenchRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%d,%d,%.3f,%.6f\n", r.method.c_str(), r.frames, r.repetitions, r.median_fps,
                  r.label_stability);
    out += buf;
  }
  return out;
}

}  // namespace rppg
