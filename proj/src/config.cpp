#include "rppg/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "rppg/error.hpp"

namespace rppg {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// Shortest text that parses back to the same double.
std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

template <class T>
T parse_as(const std::string& key, const std::string& value) {
  T out{};
  const std::string v = trim(value);
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    throw UsageError("config key '" + key + "': cannot parse '" + value + "'");
  }
  return out;
}

std::vector<int> parse_widths(const std::string& key, const std::string& value) {
  std::vector<int> out;
  std::string item;
  std::istringstream ss(value);
  while (std::getline(ss, item, ',')) out.push_back(parse_as<int>(key, item));
  if (out.empty()) throw UsageError("config key '" + key + "': empty width list");
  return out;
}

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

// Runs a sub-validator and prefixes its message with the key it concerns.
void check(const char* key, const std::function<void()>& f) {
  try {
    f();
  } catch (const UsageError& e) {
    throw UsageError(std::string("invalid config (") + key + "): " + e.what());
  }
}

}  // namespace

void PipelineConfig::set(const std::string& key, const std::string& value) {
  auto& s = segmentation;
  auto& w = windowing;
  auto& sp = spectral;
  auto& t = training;
  if (key == "seed") seed = parse_as<std::uint64_t>(key, value);
  else if (key == "jobs") jobs = parse_as<int>(key, value);
  else if (key == "downscale") downscale = parse_as<int>(key, value);
  else if (key == "k") s.k = parse_as<int>(key, value);
  else if (key == "compacity") s.compacity = parse_as<double>(key, value);
  else if (key == "max_iters") s.max_iters = parse_as<int>(key, value);
  else if (key == "initial_iters") s.initial_iters = parse_as<int>(key, value);
  else if (key == "convergence_eps") s.convergence_eps = parse_as<double>(key, value);
  else if (key == "search_radius_cells") s.search_radius_cells = parse_as<double>(key, value);
  else if (key == "max_motion_cells") s.max_motion_cells = parse_as<double>(key, value);
  else if (key == "clip_len_s") w.clip_len_s = parse_as<double>(key, value);
  else if (key == "window_len_s") w.window_len_s = parse_as<double>(key, value);
  else if (key == "stride_s") w.stride_s = parse_as<double>(key, value);
  else if (key == "band_lo_hz") sp.band_lo_hz = parse_as<double>(key, value);
  else if (key == "band_hi_hz") sp.band_hi_hz = parse_as<double>(key, value);
  else if (key == "zero_pad_factor") sp.zero_pad_factor = parse_as<int>(key, value);
  else if (key == "aggregator") sp.aggregator = parse_aggregator(trim(value));
  else if (key == "spectral_channel") sp.channel = parse_as<int>(key, value);
  else if (key == "cnn_widths") cnn.widths = parse_widths(key, value);
  else if (key == "learning_rate") t.learning_rate = parse_as<double>(key, value);
  else if (key == "batch_size") t.batch_size = parse_as<int>(key, value);
  else if (key == "epochs") t.epochs = parse_as<int>(key, value);
  else throw UsageError("unknown config key '" + key + "'");
  training.seed = seed;
}

std::vector<std::pair<std::string, std::string>> PipelineConfig::entries() const {
  return {
      {"seed", std::to_string(seed)},
      {"jobs", std::to_string(jobs)},
      {"downscale", std::to_string(downscale)},
      {"k", std::to_string(segmentation.k)},
      {"compacity", fmt(segmentation.compacity)},
      {"max_iters", std::to_string(segmentation.max_iters)},
      {"initial_iters", std::to_string(segmentation.initial_iters)},
      {"convergence_eps", fmt(segmentation.convergence_eps)},
      {"search_radius_cells", fmt(segmentation.search_radius_cells)},
      {"max_motion_cells", fmt(segmentation.max_motion_cells)},
      {"clip_len_s", fmt(windowing.clip_len_s)},
      {"window_len_s", fmt(windowing.window_len_s)},
      {"stride_s", fmt(windowing.stride_s)},
      {"band_lo_hz", fmt(spectral.band_lo_hz)},
      {"band_hi_hz", fmt(spectral.band_hi_hz)},
      {"zero_pad_factor", std::to_string(spectral.zero_pad_factor)},
      {"aggregator", std::string(aggregator_name(spectral.aggregator))},
      {"spectral_channel", std::to_string(spectral.channel)},
      {"cnn_widths", join(cnn.widths)},
      {"learning_rate", fmt(training.learning_rate)},
      {"batch_size", std::to_string(training.batch_size)},
      {"epochs", std::to_string(training.epochs)},
  };
}

std::string PipelineConfig::dump() const {
  std::string out;
  for (const auto& [k, v] : entries()) out += k + " = " + v + "\n";
  return out;
}

void PipelineConfig::apply_text(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == '[') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw UsageError(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    set(trim(std::string_view(t).substr(0, eq)), trim(std::string_view(t).substr(eq + 1)));
  }
}

void PipelineConfig::apply_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw UsageError("cannot open config file: " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  apply_text(ss.str(), file.string());
}

void PipelineConfig::validate() const {
  check("segmentation", [&] { segmentation.validate(); });
  check("windowing", [&] { windowing.validate(); });
  check("band_lo_hz/band_hi_hz", [&] {
    // Nyquist is checked again per video once fps is known.
    if (!(spectral.band_lo_hz > 0.0) || !(spectral.band_hi_hz > spectral.band_lo_hz)) {
      throw UsageError("need 0 < band_lo_hz < band_hi_hz");
    }
  });
  check("zero_pad_factor", [&] {
    if (spectral.zero_pad_factor < 1) throw UsageError("must be >= 1");
  });
  check("spectral_channel", [&] {
    if (spectral.channel < 0 || spectral.channel > 2) throw UsageError("must be 0, 1 or 2");
  });
  check("cnn_widths", [&] {
    for (const int w : cnn.widths) {
      if (w < 1) throw UsageError("widths must be >= 1");
    }
  });
  check("training", [&] { training.validate(); });
  check("downscale", [&] {
    if (downscale < 1) throw UsageError("must be >= 1");
  });
  check("jobs", [&] {
    if (jobs < 1) throw UsageError("must be >= 1");
  });
}

}  // namespace rppg
