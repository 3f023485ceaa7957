#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rppg/stmap.hpp"

namespace rppg {

// Stack of blocks [3x3 conv (same padding), 2x2 average pool (stride 2,
// partial windows at odd edges), ELU], then global average pool and one
// dense output: bpm = output_offset + output_scale * (w . g + b).
struct CnnArchitecture {
  int input_rows = 300;  // K
  int input_cols = 300;  // T
  int input_channels = 3;
  std::vector<int> widths{16, 32, 64, 64};
  double output_offset = 0.0;
  double output_scale = 1.0;

  void validate() const;
  friend bool operator==(const CnnArchitecture&, const CnnArchitecture&) = default;
};

struct TrainingParams {
  double learning_rate = 3e-3;
  int batch_size = 16;
  int epochs = 30;
  std::uint64_t seed = 0;

  void validate() const;
};

struct LabeledMap {
  SpatioTemporalMap map;
  double bpm = 0.0;
};

// Map values (p, t, c) rearranged to channel-major (c, p, t) and shifted by
// -0.5.
std::vector<double> map_to_chw(const SpatioTemporalMap& map);

class CnnModel {
 public:
  CnnModel() = default;

  // He-uniform convolution weights, small dense weights, zero biases.
  static CnnModel create(const CnnArchitecture& arch, std::uint64_t seed);

  const CnnArchitecture& architecture() const { return arch_; }
  void set_output_transform(double offset, double scale);

  std::size_t parameter_count() const { return params_.size(); }
  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  double forward(const SpatioTemporalMap& map) const;
  double forward_chw(std::span<const double> input) const;

  // Adds d|f(x) - label| / d(params) into grad and returns |f(x) - label|.
  double l1_gradient(std::span<const double> input, double label, std::span<double> grad) const;

  // Training record carried into the checkpoint.
  TrainingParams training;
  std::vector<double> epoch_loss;

  void save(const std::filesystem::path& path) const;
  std::string to_json() const;
  static CnnModel load(const std::filesystem::path& path);
  static CnnModel from_json(const std::string& text);

 private:
  struct Layout {
    std::size_t weight = 0;
    std::size_t bias = 0;
    int in_channels = 0;
    int out_channels = 0;
  };

  void build_layout();
  double run(std::span<const double> input, double label, std::span<double>* grad) const;

  CnnArchitecture arch_;
  std::vector<Layout> blocks_;
  std::size_t dense_weight_ = 0;
  std::size_t dense_bias_ = 0;
  std::vector<double> params_;
};

struct TrainingResult {
  CnnModel model;
  // Full-data L1 loss after each epoch; never increases because worse epochs
  // are rolled back.
  std::vector<double> epoch_loss;
  int rejected_epochs = 0;
};

// Mini-batch Adam on L1 loss. After every epoch the full-data loss is
// measured; an epoch that increases it is undone and the learning rate
// halved. The input shape is taken from the data; the output transform is
// fixed to the label mean and standard deviation. Deterministic for a given
// seed.
TrainingResult cnn_train(std::span<const LabeledMap> data, CnnArchitecture arch, const TrainingParams& params);

}  // namespace rppg
