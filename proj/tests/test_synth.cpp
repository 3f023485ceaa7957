#include <cmath>

#include "doctest.h"
#include "rppg/dataset.hpp"
#include "rppg/error.hpp"
#include "rppg/synth.hpp"
#include "support.hpp"

namespace {

// Mean luma of the patch's interior pixels, minus its value at zero pulse.
std::vector<double> patch_signal(const rppg::SynthConfig& sc) {
  std::vector<double> out;
  const double base = rppg::rgb_to_yuv(sc.skin).y;
  for (int i = 0; i < sc.frame_count(); ++i) {
    const auto img = rppg::render_frame(sc, i);
    double sum = 0.0;
    int n = 0;
    for (int y = int(sc.patch.y) + 2; y < int(sc.patch.y + sc.patch.h) - 2; ++y) {
      for (int x = int(sc.patch.x) + 2; x < int(sc.patch.x + sc.patch.w) - 2; ++x) {
        sum += rppg::rgb_to_yuv(img.at(x, y)).y;
        ++n;
      }
    }
    out.push_back(sum / n - base);
  }
  return out;
}

// Sign changes, skipping samples that round to exactly zero.
int zero_crossings(const std::vector<double>& s) {
  int n = 0;
  int last = 0;
  for (const double v : s) {
    const int sign = (v > 0) - (v < 0);
    if (sign == 0) continue;
    if (last != 0 && sign != last) ++n;
    last = sign;
  }
  return n;
}

}  // namespace

TEST_CASE("bpm trace") {
  const auto c = rppg::BpmTrace::constant(90);
  CHECK(c.at(0) == 90);
  CHECK(c.at(1e4) == 90);
  CHECK(c.phase(10) == doctest::Approx(15.0));

  const auto r = rppg::BpmTrace::ramp(60, 180, 60);
  CHECK(r.at(30) == doctest::Approx(120));
  // Instantaneous frequency at the midpoint.
  const double h = 1e-4;
  CHECK((r.phase(30 + h) - r.phase(30 - h)) / (2 * h) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(r.phase(60) == doctest::Approx(120.0));  // mean 120 bpm for 60 s
  CHECK(r.min_bpm() == 60);
  CHECK(r.max_bpm() == 180);

  const rppg::BpmTrace pw({{0, 60}, {10, 120}, {20, 120}, {30, 90}});
  CHECK(pw.phase(30) == doctest::Approx((10 * 90 + 10 * 120 + 10 * 105) / 60.0));
  CHECK(pw.at(40) == 90);
  CHECK_THROWS_AS(rppg::BpmTrace({{0, 60}, {0, 70}}), rppg::UsageError);
}

TEST_CASE("constant 120 bpm gives 40 crossings in 10 s") {
  rppg::SynthConfig sc;
  sc.duration_s = 10.0;
  sc.noise_sigma = 0.0;
  sc.pulse_amplitude = 20.0;
  sc.shape = rppg::PatchShape::rectangle;
  const int n = zero_crossings(patch_signal(sc));
  CAPTURE(n);
  CHECK(std::abs(n - 40) <= 1);
}

TEST_CASE("zero crossings follow the phase integral") {
  rppg::SynthConfig sc;
  sc.duration_s = 12.0;
  sc.noise_sigma = 0.0;
  sc.pulse_amplitude = 20.0;
  sc.shape = rppg::PatchShape::rectangle;
  sc.bpm = rppg::BpmTrace({{0, 70}, {4, 150}, {8, 100}, {12, 160}});
  const auto s = patch_signal(sc);
  const double expected = 2.0 * sc.bpm.phase(sc.duration_s - 1.0 / sc.fps);
  CHECK(std::abs(zero_crossings(s) - expected) <= 1.0);
}

TEST_CASE("rendering is deterministic per seed") {
  rppg::SynthConfig sc;
  sc.seed = 3;
  CHECK(rppg::render_frame(sc, 17) == rppg::render_frame(sc, 17));
  auto other = sc;
  other.seed = 4;
  CHECK_FALSE(rppg::render_frame(sc, 17) == rppg::render_frame(other, 17));
  CHECK_FALSE(rppg::render_frame(sc, 17) == rppg::render_frame(sc, 18));
}

TEST_CASE("motion and occlusion") {
  rppg::SynthConfig sc;
  sc.noise_sigma = 0.0;
  sc.pulse_amplitude = 0.0;
  sc.shape = rppg::PatchShape::rectangle;
  sc.motion.kind = rppg::Motion::Kind::drift;
  sc.motion.vx = 10.0;
  CHECK(rppg::patch_at(sc, 1.0).x == doctest::Approx(sc.patch.x + 10.0));
  const auto img = rppg::render_frame(sc, 30);
  CHECK(img.at(int(sc.patch.x) + 5, 50) == sc.background);
  CHECK(img.at(int(sc.patch.x) + 12, 50) == sc.skin);

  rppg::SynthConfig sway = sc;
  sway.motion = {};
  sway.motion.kind = rppg::Motion::Kind::sway;
  sway.motion.amplitude_px = 5.0;
  sway.motion.period_s = 2.0;
  CHECK(rppg::patch_at(sway, 0.5).x == doctest::Approx(sc.patch.x + 5.0));
  CHECK(rppg::patch_at(sway, 1.0).x == doctest::Approx(sc.patch.x).epsilon(1e-9));

  rppg::SynthConfig occ = sc;
  occ.motion = {};
  occ.occlusions.push_back({1.0, 2.0, {50, 40, 10, 10}});
  CHECK(rppg::render_frame(occ, 0).at(55, 45) == sc.skin);
  CHECK(rppg::render_frame(occ, 45).at(55, 45) == sc.distractor);
  CHECK(rppg::render_frame(occ, 60).at(55, 45) == sc.skin);
}

TEST_CASE("validation") {
  rppg::SynthConfig sc;
  sc.bpm = rppg::BpmTrace::constant(300);
  CHECK_THROWS_WITH_AS(sc.validate(), doctest::Contains("[40, 220]"), rppg::UsageError);
  sc.bpm = rppg::BpmTrace::constant(120);
  sc.fps = 3.0;
  CHECK_THROWS_WITH_AS(sc.validate(), doctest::Contains("Nyquist"), rppg::UsageError);
  sc.fps = 30.0;
  CHECK_NOTHROW(sc.validate());
}

TEST_CASE("write and reload a clip") {
  testing::TempDir tmp("synth");
  rppg::SynthConfig sc;
  sc.duration_s = 10.0;
  sc.width = 40;
  sc.height = 30;
  sc.patch = {10, 8, 20, 14};
  sc.bpm = rppg::BpmTrace::ramp(70, 100, 10);
  const auto clip = rppg::generate(sc);
  REQUIRE(clip.frames.size() == 300);
  REQUIRE(clip.gt.size() == 10);
  CHECK(clip.gt[3].t_s == 3);
  CHECK(clip.gt[3].bpm == doctest::Approx(79.0));
  rppg::write_clip(clip, tmp / "v", "alice");

  int files = 0;
  for (const auto& e : std::filesystem::directory_iterator(tmp / "v")) files += e.path().extension() == ".png";
  CHECK(files == 300);
  const auto seq = rppg::load_frames(tmp / "v");
  CHECK(seq.fps == 30.0);
  CHECK(seq.subject == "alice");
  REQUIRE(seq.frames.size() == 300);
  for (std::size_t i = 0; i < 300; i += 37) CHECK(seq.frames[i] == clip.frames[i]);
  CHECK(rppg::load_ground_truth(tmp / "v" / rppg::kGroundTruthFile) == clip.gt);

  // Streaming writer produces the same files.
  rppg::write_synthetic(sc, tmp / "w", "alice");
  CHECK(rppg::load_frames(tmp / "w").frames[123] == clip.frames[123]);

  CHECK_THROWS_AS(rppg::write_clip(rppg::SynthClip{}, tmp / "empty"), rppg::DataError);
}
