#include "rppg/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include "rppg/error.hpp"

namespace fs = std::filesystem;

namespace rppg {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
bool parse_number(const std::string& s, T& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

}  // namespace

Manifest read_manifest(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("missing manifest: " + file.string());
  Manifest m;
  bool have_fps = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw DataError(file.string() + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key == "fps") {
      if (!parse_number(value, m.fps) || !(m.fps > 0.0)) {
        throw DataError(file.string() + ":" + std::to_string(line_no) + ": fps must be a positive number");
      }
      have_fps = true;
    } else if (key == "subject") {
      m.subject = value;
    } else if (key == "frames") {
      if (!parse_number(value, m.frames) || m.frames < 0) {
        throw DataError(file.string() + ":" + std::to_string(line_no) + ": frames must be a nonnegative integer");
      }
    } else if (key == "notes") {
      m.notes = value;
    } else {
      throw DataError(file.string() + ":" + std::to_string(line_no) + ": unknown manifest key '" + key + "'");
    }
  }
  if (!have_fps) throw DataError("manifest " + file.string() + " does not declare fps");
  if (m.subject.empty()) m.subject = file.parent_path().filename().string();
  return m;
}

void write_manifest(const Manifest& m, const fs::path& file) {
  std::ofstream out(file);
  if (!out) throw DataError("cannot write manifest: " + file.string());
  char fps[64];
  std::snprintf(fps, sizeof fps, "%.17g", m.fps);
  out << "fps = " << fps << "\n";
  out << "subject = " << m.subject << "\n";
  if (m.frames >= 0) out << "frames = " << m.frames << "\n";
  if (!m.notes.empty()) out << "notes = " << m.notes << "\n";
  if (!out) throw DataError("failed writing manifest: " + file.string());
}

std::string frame_filename(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06d.png", index);
  return buf;
}

FrameDirectory::FrameDirectory(fs::path dir) : dir_(std::move(dir)) {
  if (!fs::is_directory(dir_)) throw DataError("not a directory: " + dir_.string());
  manifest_ = read_manifest(dir_ / kManifestFile);

  static const std::regex frame_re(R"((\d+)\.png)");
  std::vector<long> indices;
  for (const auto& entry : fs::directory_iterator(dir_)) {
    const std::string name = entry.path().filename().string();
    std::smatch m;
    if (entry.is_regular_file() && std::regex_match(name, m, frame_re)) indices.push_back(std::stol(m[1].str()));
  }
  if (indices.empty()) throw DataError("no frames in " + dir_.string());
  std::sort(indices.begin(), indices.end());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] != static_cast<long>(i)) {
      throw DataError("gap in frame sequence of " + dir_.string() + ": frame " + std::to_string(i) + " missing");
    }
  }
  count_ = static_cast<int>(indices.size());
  if (manifest_.frames >= 0 && manifest_.frames != count_) {
    throw DataError("manifest of " + dir_.string() + " declares " + std::to_string(manifest_.frames) +
                    " frames but " + std::to_string(count_) + " are present");
  }
}

RgbImage FrameDirectory::read(int index) const {
  if (index < 0 || index >= count_) throw DataError("frame index out of range: " + std::to_string(index));
  return read_png(dir_ / frame_filename(index));
}

FrameSequence load_frames(const fs::path& dir) {
  const FrameDirectory fd(dir);
  FrameSequence seq;
  seq.fps = fd.manifest().fps;
  seq.subject = fd.manifest().subject;
  seq.frames.reserve(fd.size());
  for (int i = 0; i < fd.size(); ++i) {
    seq.frames.push_back(fd.read(i));
    if (i > 0 && (seq.frames[i].width != seq.frames[0].width || seq.frames[i].height != seq.frames[0].height)) {
      throw DataError("frame " + std::to_string(i) + " of " + dir.string() + " has different dimensions");
    }
  }
  return seq;
}

std::vector<HrSample> parse_ground_truth(std::istream& in, const std::string& source) {
  std::vector<HrSample> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    const auto comma = t.find(',');
    if (comma == std::string::npos) throw DataError(where + ": expected 't_s,bpm'");
    HrSample s;
    if (!parse_number(trim(std::string_view(t).substr(0, comma)), s.t_s) || s.t_s < 0) {
      throw DataError(where + ": timestamp must be a nonnegative integer");
    }
    if (!parse_number(trim(std::string_view(t).substr(comma + 1)), s.bpm) || !std::isfinite(s.bpm)) {
      throw DataError(where + ": bpm is not a number");
    }
    if (s.bpm < kMinBpm || s.bpm > kMaxBpm) {
      throw DataError(where + ": bpm " + trim(std::string_view(t).substr(comma + 1)) + " outside [30, 250]");
    }
    if (!out.empty() && s.t_s <= out.back().t_s) {
      throw DataError(where + ": timestamps must be strictly increasing");
    }
    out.push_back(s);
  }
  return out;
}

std::vector<HrSample> load_ground_truth(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open ground truth: " + file.string());
  return parse_ground_truth(in, file.string());
}

void write_ground_truth(std::span<const HrSample> gt, const fs::path& file) {
  std::ofstream out(file);
  if (!out) throw DataError("cannot write ground truth: " + file.string());
  char buf[64];
  for (const HrSample& s : gt) {
    std::snprintf(buf, sizeof buf, "%d,%.17g\n", s.t_s, s.bpm);
    out << buf;
  }
  if (!out) throw DataError("failed writing ground truth: " + file.string());
}

std::optional<double> window_label(std::span<const HrSample> gt, double start_s, double len_s) {
  constexpr double kTol = 1e-9;
  const long first = static_cast<long>(std::ceil(start_s - kTol));
  const double end = start_s + len_s;
  const auto lower = std::lower_bound(gt.begin(), gt.end(), first,
                                      [](const HrSample& s, long t) { return s.t_s < t; });
  double sum = 0.0;
  long expected = first;
  auto it = lower;
  for (; expected < end - kTol; ++expected, ++it) {
    if (it == gt.end() || it->t_s != expected) return std::nullopt;
    sum += it->bpm;
  }
  const long n = expected - first;
  if (n <= 0) return std::nullopt;
  return sum / double(n);
}

LabelingResult label_maps(std::vector<SpatioTemporalMap> maps, std::span<const HrSample> gt) {
  LabelingResult r;
  for (auto& m : maps) {
    const auto label = window_label(gt, m.video_start_s(), m.window_len_s);
    if (!label) {
      ++r.dropped;
      continue;
    }
    r.labeled.push_back({std::move(m), *label});
  }
  return r;
}

void SplitSpec::validate() const {
  if (train.empty() || test.empty()) throw UsageError("split must list at least one train and one test subject");
  const std::set<std::string> tr(train.begin(), train.end());
  for (const auto& s : test) {
    if (tr.count(s)) throw UsageError("split leakage: subject '" + s + "' is in both train and test");
  }
}

bool SplitSpec::in_train(const std::string& subject) const {
  return std::find(train.begin(), train.end(), subject) != train.end();
}

bool SplitSpec::in_test(const std::string& subject) const {
  return std::find(test.begin(), test.end(), subject) != test.end();
}

SplitSpec parse_split(std::istream& in) {
  SplitSpec spec;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto colon = t.find(':');
    if (colon == std::string::npos) throw DataError("split line " + std::to_string(line_no) + ": expected 'side: ids'");
    const std::string side = trim(std::string_view(t).substr(0, colon));
    std::string ids = t.substr(colon + 1);
    std::replace(ids.begin(), ids.end(), ',', ' ');
    std::istringstream ss(ids);
    std::vector<std::string>* target = nullptr;
    if (side == "train") {
      target = &spec.train;
    } else if (side == "test") {
      target = &spec.test;
    } else {
      throw DataError("split line " + std::to_string(line_no) + ": unknown side '" + side + "'");
    }
    for (std::string id; ss >> id;) target->push_back(id);
  }
  spec.validate();
  return spec;
}

SplitSpec load_split(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open split file: " + file.string());
  return parse_split(in);
}

MetricReport compute_metrics(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) {
    throw UsageError("prediction/truth length mismatch: " + std::to_string(pred.size()) + " vs " +
                     std::to_string(truth.size()));
  }
  if (pred.empty()) throw UsageError("cannot compute metrics over zero maps");
  double abs_sum = 0.0;
  double sq_sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred[i] - truth[i];
    abs_sum += std::abs(e);
    sq_sum += e * e;
  }
  MetricReport r;
  r.n_maps = static_cast<int>(pred.size());
  r.mae = abs_sum / double(pred.size());
  r.rmse = std::sqrt(sq_sum / double(pred.size()));
  // sqrt(mean e^2) >= mean |e| holds exactly; guard the last-ulp case.
  r.rmse = std::max(r.rmse, r.mae);
  return r;
}

std::vector<fs::path> discover_videos(const fs::path& root) {
  if (!fs::is_directory(root)) throw DataError("input is not a directory: " + root.string());
  if (fs::exists(root / kManifestFile)) return {root};
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory() && fs::exists(entry.path() / kManifestFile)) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw DataError("no frame directories (with a manifest) under " + root.string());
  return out;
}

}  // namespace rppg
