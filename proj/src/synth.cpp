#include "rppg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "rppg/error.hpp"
#include "rppg/rng.hpp"

namespace fs = std::filesystem;

namespace rppg {

BpmTrace::BpmTrace(std::vector<BpmKnot> knots) : knots_(std::move(knots)) {
  if (knots_.empty()) throw UsageError("bpm trace needs at least one knot");
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    if (!(knots_[i].t_s > knots_[i - 1].t_s)) throw UsageError("bpm trace knots must have increasing times");
  }
}

BpmTrace BpmTrace::constant(double bpm) { return BpmTrace({{0.0, bpm}}); }

BpmTrace BpmTrace::ramp(double from_bpm, double to_bpm, double duration_s) {
  if (!(duration_s > 0.0)) throw UsageError("bpm ramp duration must be > 0");
  return BpmTrace({{0.0, from_bpm}, {duration_s, to_bpm}});
}

double BpmTrace::at(double t) const {
  if (t <= knots_.front().t_s) return knots_.front().bpm;
  if (t >= knots_.back().t_s) return knots_.back().bpm;
  const auto hi = std::upper_bound(knots_.begin(), knots_.end(), t,
                                   [](double v, const BpmKnot& k) { return v < k.t_s; });
  const auto lo = hi - 1;
  const double f = (t - lo->t_s) / (hi->t_s - lo->t_s);
  return lo->bpm + f * (hi->bpm - lo->bpm);
}

double BpmTrace::phase(double t) const {
  // Trapezoids between knots are exact for a linear rate.
  const auto integral = [&](double a, double b) { return 0.5 * (at(a) + at(b)) * (b - a) / 60.0; };
  if (t <= 0.0) return 0.0;
  double total = 0.0;
  double from = 0.0;
  for (const BpmKnot& k : knots_) {
    if (k.t_s <= from) continue;
    if (k.t_s >= t) break;
    total += integral(from, k.t_s);
    from = k.t_s;
  }
  return total + integral(from, t);
}

double BpmTrace::min_bpm() const {
  return std::min_element(knots_.begin(), knots_.end(), [](auto& a, auto& b) { return a.bpm < b.bpm; })->bpm;
}

double BpmTrace::max_bpm() const {
  return std::max_element(knots_.begin(), knots_.end(), [](auto& a, auto& b) { return a.bpm < b.bpm; })->bpm;
}

void SynthConfig::validate() const {
  if (width < 1 || height < 1) throw UsageError("synth frame size must be positive");
  if (!(fps > 0.0)) throw UsageError("synth fps must be > 0");
  if (!(duration_s > 0.0)) throw UsageError("synth duration must be > 0");
  if (bpm.knots().empty()) throw UsageError("synth needs a bpm trace");
  if (bpm.min_bpm() < 40.0 || bpm.max_bpm() > 220.0) {
    throw UsageError("synth bpm must lie within [40, 220] (got " + std::to_string(bpm.min_bpm()) + ".." +
                     std::to_string(bpm.max_bpm()) + ")");
  }
  if (!(fps > 2.0 * bpm.max_bpm() / 60.0)) {
    throw UsageError("synth violates Nyquist: fps " + std::to_string(fps) + " <= 2 x " +
                     std::to_string(bpm.max_bpm() / 60.0) + " Hz");
  }
  if (pulse_amplitude < 0.0 || noise_sigma < 0.0) throw UsageError("synth amplitudes must be nonnegative");
  if (!(patch.w > 0.0) || !(patch.h > 0.0)) throw UsageError("synth skin patch must have positive size");
  if (motion.kind == Motion::Kind::sway && !(motion.period_s > 0.0)) throw UsageError("sway period must be > 0");
}

int SynthConfig::frame_count() const { return static_cast<int>(std::lround(duration_s * fps)); }

double pulse_offset(const SynthConfig& config, double t) {
  return 0.5 * config.pulse_amplitude * std::sin(2.0 * std::numbers::pi * config.bpm.phase(t));
}

RectF patch_at(const SynthConfig& config, double t) {
  RectF r = config.patch;
  switch (config.motion.kind) {
    case Motion::Kind::none:
      break;
    case Motion::Kind::drift:
      r.x += config.motion.vx * t;
      r.y += config.motion.vy * t;
      break;
    case Motion::Kind::sway:
      r.x += config.motion.amplitude_px * std::sin(2.0 * std::numbers::pi * t / config.motion.period_s);
      break;
  }
  return r;
}

namespace {

bool inside(const RectF& r, PatchShape shape, double px, double py) {
  if (px < r.x || py < r.y || px >= r.x + r.w || py >= r.y + r.h) return false;
  if (shape == PatchShape::rectangle) return true;
  const double nx = (px - (r.x + 0.5 * r.w)) / (0.5 * r.w);
  const double ny = (py - (r.y + 0.5 * r.h)) / (0.5 * r.h);
  return nx * nx + ny * ny <= 1.0;
}

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

}  // namespace

RgbImage render_frame(const SynthConfig& config, int index) {
  const double t = index / config.fps;
  const RectF patch = patch_at(config, t);
  const double pulse = pulse_offset(config, t);
  std::vector<const Occlusion*> active;
  for (const Occlusion& o : config.occlusions) {
    if (t >= o.start_s && t < o.end_s) active.push_back(&o);
  }

  std::mt19937_64 g = rng::substream(config.seed, static_cast<std::uint64_t>(index));
  rng::Normal normal;
  const bool noisy = config.noise_sigma > 0.0;

  RgbImage img(config.width, config.height);
  for (int y = 0; y < config.height; ++y) {
    for (int x = 0; x < config.width; ++x) {
      const double px = x + 0.5;
      const double py = y + 0.5;
      double r, gg, b;
      if (inside(patch, config.shape, px, py)) {
        // Equal offset on all channels moves luma by `pulse` and leaves chroma.
        r = config.skin.r + pulse;
        gg = config.skin.g + pulse;
        b = config.skin.b + pulse;
      } else {
        r = config.background.r;
        gg = config.background.g;
        b = config.background.b;
      }
      for (const Occlusion* o : active) {
        if (inside(o->region, PatchShape::rectangle, px, py)) {
          r = config.distractor.r;
          gg = config.distractor.g;
          b = config.distractor.b;
        }
      }
      if (noisy) {
        r += config.noise_sigma * normal(g);
        gg += config.noise_sigma * normal(g);
        b += config.noise_sigma * normal(g);
      }
      img.set(x, y, {to_byte(r), to_byte(gg), to_byte(b)});
    }
  }
  return img;
}

std::vector<HrSample> synth_ground_truth(const SynthConfig& config) {
  std::vector<HrSample> gt;
  const int seconds = static_cast<int>(std::floor(config.duration_s + 1e-9));
  for (int s = 0; s < seconds; ++s) gt.push_back({s, config.bpm.at(double(s))});
  return gt;
}

SynthClip generate(const SynthConfig& config) {
  config.validate();
  SynthClip clip;
  clip.config = config;
  const int n = config.frame_count();
  clip.frames.reserve(n);
  for (int i = 0; i < n; ++i) clip.frames.push_back(render_frame(config, i));
  clip.gt = synth_ground_truth(config);
  return clip;
}

namespace {

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir.string() + ": " + ec.message());
}

Manifest synth_manifest(const SynthConfig& config, int frames, const std::string& subject) {
  Manifest m;
  m.fps = config.fps;
  m.subject = subject;
  m.frames = frames;
  m.notes = "synthetic seed=" + std::to_string(config.seed);
  return m;
}

}  // namespace

void write_clip(const SynthClip& clip, const fs::path& dir, const std::string& subject) {
  if (clip.frames.empty()) throw DataError("refusing to write an empty clip to " + dir.string());
  prepare_dir(dir);
  for (std::size_t i = 0; i < clip.frames.size(); ++i) {
    write_png(clip.frames[i], dir / frame_filename(static_cast<int>(i)));
  }
  write_manifest(synth_manifest(clip.config, static_cast<int>(clip.frames.size()), subject), dir / kManifestFile);
  write_ground_truth(clip.gt, dir / kGroundTruthFile);
}

void write_synthetic(const SynthConfig& config, const fs::path& dir, const std::string& subject) {
  config.validate();
  const int n = config.frame_count();
  if (n < 1) throw DataError("synthetic clip would be empty");
  prepare_dir(dir);
  for (int i = 0; i < n; ++i) write_png(render_frame(config, i), dir / frame_filename(i));
  write_manifest(synth_manifest(config, n, subject), dir / kManifestFile);
  write_ground_truth(synth_ground_truth(config), dir / kGroundTruthFile);
}

}  // namespace rppg
