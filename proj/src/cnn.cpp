#include "rppg/cnn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "rppg/error.hpp"
#include "rppg/rng.hpp"
#include "rppg/simd/kernels.hpp"

namespace rppg {
namespace {

constexpr int kKernel = 3;
// Normalized maps live in [0, 1]; the network sees them centred on zero.
constexpr double kInputShift = -0.5;
constexpr const char* kFormat = "rppg-cnn";
constexpr int kFormatVersion = 1;

double elu(double z) { return z > 0.0 ? z : std::expm1(z); }
double elu_grad(double z) { return z > 0.0 ? 1.0 : std::exp(z); }

int pooled(int n) { return (n + 1) / 2; }

// out[co] = bias[co] + sum_ci conv3x3(in[ci], w[co][ci]); accumulation order
// per output element is (ci, ky, kx) on every ISA.
void conv_forward(const simd::KernelTable& kern, const double* in, int cin, int h, int w, const double* weight,
                  const double* bias, int cout, double* out) {
  for (int co = 0; co < cout; ++co) {
    for (int y = 0; y < h; ++y) {
      double* out_row = out + (std::size_t(co) * h + y) * w;
      std::fill(out_row, out_row + w, bias[co]);
      for (int ci = 0; ci < cin; ++ci) {
        const double* wk = weight + (std::size_t(co) * cin + ci) * kKernel * kKernel;
        for (int ky = 0; ky < kKernel; ++ky) {
          const int iy = y + ky - 1;
          if (iy < 0 || iy >= h) continue;
          const double* in_row = in + (std::size_t(ci) * h + iy) * w;
          for (int kx = 0; kx < kKernel; ++kx) {
            const int off = kx - 1;
            const int x0 = std::max(0, -off);
            const int x1 = std::min(w, w - off);
            if (x1 > x0) kern.axpy(wk[ky * kKernel + kx], in_row + x0 + off, out_row + x0, std::size_t(x1 - x0));
          }
        }
      }
    }
  }
}

void conv_backward(const simd::KernelTable& kern, const double* in, int cin, int h, int w, const double* weight,
                   int cout, const double* grad_out, double* grad_weight, double* grad_bias, double* grad_in) {
  for (int co = 0; co < cout; ++co) {
    for (int y = 0; y < h; ++y) {
      const double* g_row = grad_out + (std::size_t(co) * h + y) * w;
      double row_sum = 0.0;
      for (int x = 0; x < w; ++x) row_sum += g_row[x];
      grad_bias[co] += row_sum;
      for (int ci = 0; ci < cin; ++ci) {
        const std::size_t wbase = (std::size_t(co) * cin + ci) * kKernel * kKernel;
        for (int ky = 0; ky < kKernel; ++ky) {
          const int iy = y + ky - 1;
          if (iy < 0 || iy >= h) continue;
          const double* in_row = in + (std::size_t(ci) * h + iy) * w;
          double* gin_row = grad_in ? grad_in + (std::size_t(ci) * h + iy) * w : nullptr;
          for (int kx = 0; kx < kKernel; ++kx) {
            const int off = kx - 1;
            const int x0 = std::max(0, -off);
            const int x1 = std::min(w, w - off);
            if (x1 <= x0) continue;
            const std::size_t n = std::size_t(x1 - x0);
            grad_weight[wbase + ky * kKernel + kx] += kern.dot(g_row + x0, in_row + x0 + off, n);
            if (gin_row) kern.axpy(weight[wbase + ky * kKernel + kx], g_row + x0, gin_row + x0 + off, n);
          }
        }
      }
    }
  }
}

void pool_forward(const double* in, int c, int h, int w, double* out) {
  const int ho = pooled(h);
  const int wo = pooled(w);
  for (int ch = 0; ch < c; ++ch) {
    for (int i = 0; i < ho; ++i) {
      const int r0 = 2 * i;
      const int r1 = std::min(h, r0 + 2);
      for (int j = 0; j < wo; ++j) {
        const int c0 = 2 * j;
        const int c1 = std::min(w, c0 + 2);
        double s = 0.0;
        for (int r = r0; r < r1; ++r) {
          for (int q = c0; q < c1; ++q) s += in[(std::size_t(ch) * h + r) * w + q];
        }
        out[(std::size_t(ch) * ho + i) * wo + j] = s / double((r1 - r0) * (c1 - c0));
      }
    }
  }
}

void pool_backward(const double* grad_out, int c, int h, int w, double* grad_in) {
  const int ho = pooled(h);
  const int wo = pooled(w);
  for (int ch = 0; ch < c; ++ch) {
    for (int i = 0; i < ho; ++i) {
      const int r0 = 2 * i;
      const int r1 = std::min(h, r0 + 2);
      for (int j = 0; j < wo; ++j) {
        const int c0 = 2 * j;
        const int c1 = std::min(w, c0 + 2);
        const double g = grad_out[(std::size_t(ch) * ho + i) * wo + j] / double((r1 - r0) * (c1 - c0));
        for (int r = r0; r < r1; ++r) {
          for (int q = c0; q < c1; ++q) grad_in[(std::size_t(ch) * h + r) * w + q] = g;
        }
      }
    }
  }
}

}  // namespace

void CnnArchitecture::validate() const {
  if (input_rows < 1 || input_cols < 1) throw UsageError("CNN input shape must be positive");
  if (input_channels < 1) throw UsageError("CNN input_channels must be >= 1");
  if (widths.empty()) throw UsageError("CNN needs at least one block");
  for (const int w : widths) {
    if (w < 1) throw UsageError("CNN block widths must be >= 1");
  }
  if (!(output_scale > 0.0) || !std::isfinite(output_offset)) throw UsageError("invalid CNN output transform");
}

void TrainingParams::validate() const {
  if (!(learning_rate > 0.0)) throw UsageError("learning_rate must be > 0");
  if (batch_size < 1) throw UsageError("batch_size must be >= 1");
  if (epochs < 1) throw UsageError("epochs must be >= 1");
}

std::vector<double> map_to_chw(const SpatioTemporalMap& map) {
  std::vector<double> out(map.values.size());
  const std::size_t plane = std::size_t(map.k) * map.t;
  for (int p = 0; p < map.k; ++p) {
    for (int i = 0; i < map.t; ++i) {
      for (int c = 0; c < 3; ++c) out[c * plane + std::size_t(p) * map.t + i] = map.at(p, i, c) + kInputShift;
    }
  }
  return out;
}

void CnnModel::build_layout() {
  arch_.validate();
  blocks_.clear();
  std::size_t offset = 0;
  int cin = arch_.input_channels;
  for (const int cout : arch_.widths) {
    Layout l;
    l.in_channels = cin;
    l.out_channels = cout;
    l.weight = offset;
    offset += std::size_t(cout) * cin * kKernel * kKernel;
    l.bias = offset;
    offset += cout;
    blocks_.push_back(l);
    cin = cout;
  }
  dense_weight_ = offset;
  offset += cin;
  dense_bias_ = offset;
  offset += 1;
  params_.assign(offset, 0.0);
}

CnnModel CnnModel::create(const CnnArchitecture& arch, std::uint64_t seed) {
  CnnModel m;
  m.arch_ = arch;
  m.build_layout();
  std::mt19937_64 g = rng::substream(seed, 0x11);
  for (const Layout& l : m.blocks_) {
    const double limit = std::sqrt(6.0 / double(l.in_channels * kKernel * kKernel));
    const std::size_t n = std::size_t(l.out_channels) * l.in_channels * kKernel * kKernel;
    for (std::size_t i = 0; i < n; ++i) m.params_[l.weight + i] = rng::uniform(g, -limit, limit);
  }
  const int c = m.arch_.widths.back();
  const double limit = std::sqrt(6.0 / double(c + 1));
  for (int i = 0; i < c; ++i) m.params_[m.dense_weight_ + i] = rng::uniform(g, -limit, limit);
  return m;
}

void CnnModel::set_output_transform(double offset, double scale) {
  arch_.output_offset = offset;
  arch_.output_scale = scale;
  arch_.validate();
}

double CnnModel::forward(const SpatioTemporalMap& map) const {
  if (map.k != arch_.input_rows || map.t != arch_.input_cols || arch_.input_channels != 3) {
    throw UsageError("map shape " + std::to_string(map.k) + "x" + std::to_string(map.t) +
                     " does not match model input " + std::to_string(arch_.input_rows) + "x" +
                     std::to_string(arch_.input_cols));
  }
  return forward_chw(map_to_chw(map));
}

double CnnModel::forward_chw(std::span<const double> input) const { return run(input, 0.0, nullptr); }

double CnnModel::l1_gradient(std::span<const double> input, double label, std::span<double> grad) const {
  if (grad.size() != params_.size()) throw UsageError("gradient buffer size mismatch");
  return std::abs(run(input, label, &grad) - label);
}

double CnnModel::run(std::span<const double> input, double label, std::span<double>* grad) const {
  if (params_.empty()) throw UsageError("CNN model has no parameters");
  const std::size_t expected = std::size_t(arch_.input_channels) * arch_.input_rows * arch_.input_cols;
  if (input.size() != expected) throw UsageError("CNN input size mismatch");

  const auto& kern = simd::kernels();
  const std::size_t nb = blocks_.size();
  std::vector<int> hs(nb + 1), ws(nb + 1);
  hs[0] = arch_.input_rows;
  ws[0] = arch_.input_cols;
  std::vector<std::vector<double>> conv(nb), pre(nb), act(nb);

  const double* x = input.data();
  for (std::size_t b = 0; b < nb; ++b) {
    const Layout& l = blocks_[b];
    const int h = hs[b];
    const int w = ws[b];
    conv[b].assign(std::size_t(l.out_channels) * h * w, 0.0);
    conv_forward(kern, x, l.in_channels, h, w, &params_[l.weight], &params_[l.bias], l.out_channels,
                 conv[b].data());
    hs[b + 1] = pooled(h);
    ws[b + 1] = pooled(w);
    pre[b].assign(std::size_t(l.out_channels) * hs[b + 1] * ws[b + 1], 0.0);
    pool_forward(conv[b].data(), l.out_channels, h, w, pre[b].data());
    act[b].resize(pre[b].size());
    std::transform(pre[b].begin(), pre[b].end(), act[b].begin(), elu);
    x = act[b].data();
  }

  const int channels = arch_.widths.back();
  const std::size_t hw = std::size_t(hs[nb]) * ws[nb];
  std::vector<double> gap(channels, 0.0);
  for (int c = 0; c < channels; ++c) {
    double s = 0.0;
    for (std::size_t i = 0; i < hw; ++i) s += act[nb - 1][c * hw + i];
    gap[c] = s / double(hw);
  }
  double raw = params_[dense_bias_];
  for (int c = 0; c < channels; ++c) raw += params_[dense_weight_ + c] * gap[c];
  const double out = arch_.output_offset + arch_.output_scale * raw;
  if (grad == nullptr) return out;

  std::span<double> g = *grad;
  const double sign = out > label ? 1.0 : (out < label ? -1.0 : 0.0);
  const double d_raw = sign * arch_.output_scale;
  g[dense_bias_] += d_raw;
  std::vector<double> d_act(std::size_t(channels) * hw);
  for (int c = 0; c < channels; ++c) {
    g[dense_weight_ + c] += d_raw * gap[c];
    const double d = d_raw * params_[dense_weight_ + c] / double(hw);
    std::fill(d_act.begin() + c * hw, d_act.begin() + (c + 1) * hw, d);
  }

  for (std::size_t bi = nb; bi-- > 0;) {
    const Layout& l = blocks_[bi];
    const int h = hs[bi];
    const int w = ws[bi];
    for (std::size_t i = 0; i < d_act.size(); ++i) d_act[i] *= elu_grad(pre[bi][i]);
    std::vector<double> d_conv(conv[bi].size());
    pool_backward(d_act.data(), l.out_channels, h, w, d_conv.data());
    const double* in = bi == 0 ? input.data() : act[bi - 1].data();
    std::vector<double> d_in;
    if (bi > 0) d_in.assign(std::size_t(l.in_channels) * h * w, 0.0);
    conv_backward(kern, in, l.in_channels, h, w, &params_[l.weight], l.out_channels, d_conv.data(), &g[l.weight],
                  &g[l.bias], bi > 0 ? d_in.data() : nullptr);
    d_act = std::move(d_in);
  }
  return out;
}

std::string CnnModel::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = kFormat;
  j["version"] = kFormatVersion;
  auto& a = j["architecture"];
  a["input_rows"] = arch_.input_rows;
  a["input_cols"] = arch_.input_cols;
  a["input_channels"] = arch_.input_channels;
  a["widths"] = arch_.widths;
  a["input_shift"] = kInputShift;
  a["kernel"] = kKernel;
  a["pool"] = 2;
  a["activation"] = "elu";
  a["output_offset"] = arch_.output_offset;
  a["output_scale"] = arch_.output_scale;

  nlohmann::ordered_json tensors = nlohmann::ordered_json::array();
  const auto slice = [&](std::size_t begin, std::size_t n) {
    return std::vector<double>(params_.begin() + begin, params_.begin() + begin + n);
  };
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const Layout& l = blocks_[b];
    const std::string name = "block" + std::to_string(b) + ".conv";
    tensors.push_back({{"name", name + ".weight"},
                       {"shape", {l.out_channels, l.in_channels, kKernel, kKernel}},
                       {"values", slice(l.weight, std::size_t(l.out_channels) * l.in_channels * kKernel * kKernel)}});
    tensors.push_back({{"name", name + ".bias"}, {"shape", {l.out_channels}}, {"values", slice(l.bias, l.out_channels)}});
  }
  const int c = arch_.widths.back();
  tensors.push_back({{"name", "dense.weight"}, {"shape", {c}}, {"values", slice(dense_weight_, c)}});
  tensors.push_back({{"name", "dense.bias"}, {"shape", {1}}, {"values", slice(dense_bias_, 1)}});
  j["parameters"]["count"] = params_.size();
  j["parameters"]["tensors"] = std::move(tensors);

  auto& t = j["training"];
  t["loss"] = "l1";
  t["optimizer"] = "adam";
  t["learning_rate"] = training.learning_rate;
  t["batch_size"] = training.batch_size;
  t["epochs"] = training.epochs;
  t["seed"] = training.seed;
  t["epoch_loss"] = epoch_loss;
  return j.dump(1) + "\n";
}

CnnModel CnnModel::from_json(const std::string& text) {
  CnnModel m;
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format").get<std::string>() != kFormat) throw DataError("not an rppg CNN checkpoint");
    const int version = j.at("version").get<int>();
    if (version != kFormatVersion) throw DataError("unsupported checkpoint version " + std::to_string(version));
    const auto& a = j.at("architecture");
    m.arch_.input_rows = a.at("input_rows").get<int>();
    m.arch_.input_cols = a.at("input_cols").get<int>();
    m.arch_.input_channels = a.at("input_channels").get<int>();
    m.arch_.widths = a.at("widths").get<std::vector<int>>();
    m.arch_.output_offset = a.at("output_offset").get<double>();
    m.arch_.output_scale = a.at("output_scale").get<double>();
    if (a.value("input_shift", kInputShift) != kInputShift) throw DataError("unsupported checkpoint input shift");
    m.build_layout();
    std::size_t offset = 0;
    for (const auto& t : j.at("parameters").at("tensors")) {
      const auto values = t.at("values").get<std::vector<double>>();
      if (offset + values.size() > m.params_.size()) throw DataError("checkpoint holds too many parameters");
      std::copy(values.begin(), values.end(), m.params_.begin() + offset);
      offset += values.size();
    }
    if (offset != m.params_.size()) throw DataError("checkpoint parameter count does not match architecture");
    const auto& t = j.at("training");
    m.training.learning_rate = t.at("learning_rate").get<double>();
    m.training.batch_size = t.at("batch_size").get<int>();
    m.training.epochs = t.at("epochs").get<int>();
    m.training.seed = t.at("seed").get<std::uint64_t>();
    m.epoch_loss = t.at("epoch_loss").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  } catch (const UsageError& e) {
    throw DataError(std::string("invalid checkpoint architecture: ") + e.what());
  }
  return m;
}

void CnnModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path.string());
  out << to_json();
  if (!out) throw DataError("failed writing checkpoint: " + path.string());
}

CnnModel CnnModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

TrainingResult cnn_train(std::span<const LabeledMap> data, CnnArchitecture arch, const TrainingParams& params) {
  params.validate();
  if (data.empty()) throw UsageError("cannot train on an empty dataset");
  const int k = data.front().map.k;
  const int t = data.front().map.t;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i].map.k != k || data[i].map.t != t) {
      throw UsageError("inconsistent map shapes in training set (sample " + std::to_string(i) + ")");
    }
  }
  arch.input_rows = k;
  arch.input_cols = t;
  arch.input_channels = 3;

  double mean = 0.0;
  for (const auto& s : data) mean += s.bpm;
  mean /= double(data.size());
  double var = 0.0;
  for (const auto& s : data) var += (s.bpm - mean) * (s.bpm - mean);
  const double sd = std::sqrt(var / double(data.size()));
  arch.output_offset = mean;
  arch.output_scale = std::max(1.0, sd);

  TrainingResult result;
  CnnModel& model = result.model;
  model = CnnModel::create(arch, params.seed);
  model.training = params;

  const std::size_t np = model.parameter_count();
  std::vector<double> grad(np), m1(np, 0.0), m2(np, 0.0);
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  double beta1_t = 1.0;
  double beta2_t = 1.0;

  std::mt19937_64 shuffle_rng = rng::substream(params.seed, 0x22);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  const auto dataset_loss = [&] {
    double sum = 0.0;
    for (const auto& s : data) sum += std::abs(model.forward(s.map) - s.bpm);
    return sum / double(data.size());
  };

  // An epoch whose full-data loss is worse than the last accepted one is
  // rolled back and retried at half the learning rate; accepted epochs move
  // the rate back towards its configured value.
  struct Snapshot {
    std::vector<double> w, m1, m2;
    double beta1_t = 1.0, beta2_t = 1.0;
  };
  const auto take = [&] {
    const auto w = model.parameters();
    return Snapshot{{w.begin(), w.end()}, m1, m2, beta1_t, beta2_t};
  };
  Snapshot accepted = take();
  double accepted_loss = dataset_loss();
  double lr = params.learning_rate;

  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng::below(shuffle_rng, i)]);
    for (std::size_t start = 0; start < order.size(); start += params.batch_size) {
      const std::size_t end = std::min(order.size(), start + params.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t i = start; i < end; ++i) {
        const LabeledMap& s = data[order[i]];
        model.l1_gradient(map_to_chw(s.map), s.bpm, grad);
      }
      const double inv = 1.0 / double(end - start);
      beta1_t *= kBeta1;
      beta2_t *= kBeta2;
      const double step = lr * std::sqrt(1.0 - beta2_t) / (1.0 - beta1_t);
      std::span<double> w = model.parameters();
      for (std::size_t p = 0; p < np; ++p) {
        const double gp = grad[p] * inv;
        m1[p] = kBeta1 * m1[p] + (1.0 - kBeta1) * gp;
        m2[p] = kBeta2 * m2[p] + (1.0 - kBeta2) * gp * gp;
        w[p] -= step * m1[p] / (std::sqrt(m2[p]) + kEps);
      }
    }
    const double loss = dataset_loss();
    if (loss <= accepted_loss) {
      accepted = take();
      accepted_loss = loss;
      lr = std::min(params.learning_rate, 2.0 * lr);
    } else {
      std::copy(accepted.w.begin(), accepted.w.end(), model.parameters().begin());
      m1 = accepted.m1;
      m2 = accepted.m2;
      beta1_t = accepted.beta1_t;
      beta2_t = accepted.beta2_t;
      lr *= 0.5;
      ++result.rejected_epochs;
    }
    result.epoch_loss.push_back(accepted_loss);
  }
  model.epoch_loss = result.epoch_loss;
  return result;
}

}  // namespace rppg
