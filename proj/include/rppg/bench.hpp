#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rppg/config.hpp"
#include "rppg/image.hpp"

namespace rppg {

// ibis_warm: seeds propagated frame to frame.
// ibis_cold: seeds re-initialised from the grid on every frame.
// grid:      fixed blocks, no iteration.
enum class BenchMethod { ibis_warm, ibis_cold, grid };

BenchMethod parse_bench_method(const std::string& name);
std::string bench_method_name(BenchMethod m);

struct BenchRow {
  std::string method;
  int frames = 0;
  int repetitions = 0;
  std::vector<double> fps_runs;
  double median_fps = 0.0;
  // Mean over consecutive frame pairs of the fraction of pixels whose label
  // did not change.
  double label_stability = 0.0;
};

// Times superpixel segmentation over the frames; decoding and Lab conversion
// happen once beforehand and are not timed. Each method gets one untimed warm-up pass; the timed passes are
// interleaved across methods, `repetitions` per method.
std::vector<BenchRow> bench_methods(std::span<const RgbImage> frames, std::span<const BenchMethod> methods,
                                    const PipelineConfig& config, int repetitions = 3);

BenchRow bench_method(std::span<const RgbImage> frames, BenchMethod method, const PipelineConfig& config,
                      int repetitions = 3);

std::vector<BenchRow> run_bench(const std::filesystem::path& dir, const std::vector<std::string>& methods,
                                const PipelineConfig& config, int repetitions = 3);

std::string format_bench(const std::vector<BenchRow>& rows);

}  // namespace rppg
