#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "rppg/cnn.hpp"
#include "rppg/spectral.hpp"
#include "rppg/stmap.hpp"
#include "rppg/superpixel.hpp"

namespace rppg {

// Every tunable of the pipeline, addressed by flat keys. Layering is done by
// applying sources in order: built-in defaults, config file, environment,
// command-line flags.
struct PipelineConfig {
  SegmentationParams segmentation;
  WindowingParams windowing;
  SpectralParams spectral;
  CnnArchitecture cnn;
  TrainingParams training;
  int downscale = 1;
  int jobs = 1;
  std::uint64_t seed = 0;

  // Throws UsageError naming the key for unknown keys or unparsable values.
  void set(const std::string& key, const std::string& value);

  // Resolved (key, value) pairs in a stable order.
  std::vector<std::pair<std::string, std::string>> entries() const;

  // "key = value" lines; feeding the text back through apply_text reproduces
  // this configuration.
  std::string dump() const;
  void apply_text(const std::string& text, const std::string& source = "<config>");
  void apply_file(const std::filesystem::path& file);

  void validate() const;
};

}  // namespace rppg
