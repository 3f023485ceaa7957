#include <array>
#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "rppg/error.hpp"
#include "rppg/rng.hpp"
#include "rppg/superpixel.hpp"
#include "rppg/synth.hpp"

namespace {

rppg::LabImage uniform_lab(int w, int h, rppg::Rgb8 c = {120, 130, 140}) {
  return rppg::to_lab(rppg::RgbImage(w, h, c));
}

rppg::LabImage two_tone(int w, int h) {
  rppg::RgbImage img(w, h, {255, 255, 255});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w / 2; ++x) img.set(x, y, {0, 0, 0});
  }
  return rppg::to_lab(img);
}

rppg::Seed seed_at(int id, double x, double y, rppg::Lab lab = {}) {
  rppg::Seed s;
  s.id = id;
  s.x = x;
  s.y = y;
  s.lab = lab;
  return s;
}

// Plain argmin over live seeds within the radius, lowest id on ties.
rppg::LabelMap oracle(const rppg::LabImage& f, const std::vector<rppg::Seed>& seeds,
                      const rppg::SegmentationParams& p) {
  const double r = p.search_radius_cells * rppg::grid_layout(f.width, f.height, p.k).cell_size();
  rppg::LabelMap out(f.width, f.height);
  for (int y = 0; y < f.height; ++y) {
    for (int x = 0; x < f.width; ++x) {
      const rppg::PixelSample px{x + 0.5, y + 0.5, f.at(x, y)};
      for (const bool local : {true, false}) {
        double best = std::numeric_limits<double>::infinity();
        int arg = -1;
        for (const auto& s : seeds) {
          const double d2 = (px.x - s.x) * (px.x - s.x) + (px.y - s.y) * (px.y - s.y);
          if (!s.alive || (local && !(d2 <= r * r))) continue;
          const double d = rppg::total_distance(px, s, p.compacity);
          if (d < best) {
            best = d;
            arg = s.id;
          }
        }
        if (arg >= 0) {
          out.labels[std::size_t(y) * f.width + x] = arg;
          break;
        }
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("grid layout") {
  auto g = rppg::grid_layout(64, 32, 8);
  CHECK(g.cols == 4);
  CHECK(g.rows == 2);
  CHECK(g.cell_w == 16.0);
  CHECK(g.cell_h == 16.0);

  g = rppg::grid_layout(160, 120, 300);
  CHECK(g.cols * g.rows >= 300);
  CHECK((g.rows - 1) * g.cols < 300);

  CHECK_THROWS_WITH_AS(rppg::grid_layout(4, 4, 17), doctest::Contains("over-segmentation request"), rppg::UsageError);
  CHECK_NOTHROW(rppg::grid_layout(4, 4, 16));
}

TEST_CASE("init_seeds places a truncated row-major grid") {
  auto seeds = rppg::init_seeds(uniform_lab(100, 100), 4);
  REQUIRE(seeds.size() == 4);
  const double want[4][2] = {{25, 25}, {75, 25}, {25, 75}, {75, 75}};
  for (int i = 0; i < 4; ++i) {
    CHECK(seeds[i].id == i);
    CHECK(seeds[i].x == want[i][0]);
    CHECK(seeds[i].y == want[i][1]);
  }
  seeds = rppg::init_seeds(uniform_lab(100, 100), 1);
  REQUIRE(seeds.size() == 1);
  CHECK(seeds[0].x == 50.0);
  CHECK(seeds[0].y == 50.0);

  for (const int k : {1, 7, 50, 300}) CHECK(rppg::init_seeds(uniform_lab(160, 120), k).size() == std::size_t(k));
  CHECK_THROWS_AS(rppg::init_seeds(uniform_lab(3, 3), 10), rppg::UsageError);
}

TEST_CASE("total_distance") {
  const rppg::PixelSample p{0, 0, {50, 0, 0}};
  const auto s = seed_at(0, 3, 4, {50, 3, 4});
  CHECK(rppg::total_distance(p, s, 1.0) == 10.0);
  CHECK(rppg::total_distance(p, s, 2.0) == 6.25);
  CHECK(rppg::total_distance({3, 4, {50, 3, 4}}, s, 20.0) == 0.0);
}

TEST_CASE("assign_pixels on uniform and two-tone frames") {
  rppg::SegmentationParams p;
  p.k = 4;
  const auto f = uniform_lab(100, 100);
  const auto labels = rppg::assign_pixels(f, rppg::init_seeds(f, 4), p);
  for (int y = 0; y < 100; ++y) {
    for (int x = 0; x < 100; ++x) CHECK(labels.at(x, y) == (y >= 50 ? 2 : 0) + (x >= 50 ? 1 : 0));
  }

  const auto tt = two_tone(16, 16);
  for (const double c : {1.0, 2.0, 5.0, 20.0, 100.0}) {
    p.k = 2;
    p.compacity = c;
    const std::vector<rppg::Seed> seeds{seed_at(0, 4, 8, tt.at(0, 0)), seed_at(1, 12, 8, tt.at(15, 0))};
    const auto l = rppg::assign_pixels(tt, seeds, p);
    CHECK(l == oracle(tt, seeds, p));
    for (int y = 0; y < 16; ++y) {
      for (int x = 0; x < 16; ++x) CHECK(l.at(x, y) == (x < 8 ? 0 : 1));
    }
  }
}

TEST_CASE("ties go to the lowest id") {
  rppg::SegmentationParams p;
  p.k = 2;
  const auto f = uniform_lab(4, 1);
  // Pixel centres 0.5..3.5; seeds symmetric about x = 1.5.
  const std::vector<rppg::Seed> seeds{seed_at(0, 0.5, 0.5, f.at(0, 0)), seed_at(1, 2.5, 0.5, f.at(0, 0))};
  CHECK(rppg::assign_pixels(f, seeds, p).at(1, 0) == 0);
  const std::vector<rppg::Seed> swapped{seed_at(0, 2.5, 0.5, f.at(0, 0)), seed_at(1, 0.5, 0.5, f.at(0, 0))};
  CHECK(rppg::assign_pixels(f, swapped, p).at(1, 0) == 0);
}

TEST_CASE("assign_pixels matches the brute-force oracle") {
  std::mt19937_64 g = rppg::rng::substream(7, 7);
  for (int trial = 0; trial < 40; ++trial) {
    rppg::RgbImage img(16, 12);
    for (int y = 0; y < 12; ++y) {
      for (int x = 0; x < 16; ++x) {
        img.set(x, y, {std::uint8_t(rppg::rng::below(g, 256)), std::uint8_t(rppg::rng::below(g, 256)),
                       std::uint8_t(rppg::rng::below(g, 256))});
      }
    }
    const auto f = rppg::to_lab(img);
    rppg::SegmentationParams p;
    p.k = 1 + int(rppg::rng::below(g, 12));
    p.compacity = rppg::rng::uniform(g, 0.5, 30.0);
    p.search_radius_cells = rppg::rng::uniform(g, 0.3, 3.0);
    auto seeds = rppg::init_seeds(f, p.k);
    for (auto& s : seeds) {
      s.x += rppg::rng::uniform(g, -4, 4);
      s.y += rppg::rng::uniform(g, -4, 4);
      if (s.id > 0 && rppg::rng::uniform01(g) < 0.2) s.alive = false;
    }
    CHECK(rppg::assign_pixels(f, seeds, p) == oracle(f, seeds, p));
  }
}

TEST_CASE("update_seeds") {
  const auto f = uniform_lab(100, 100);
  rppg::SegmentationParams p;
  p.k = 4;
  const auto seeds = rppg::init_seeds(f, 4);
  auto moved = seeds;
  for (auto& s : moved) {
    s.x += 3;
    s.y -= 2;
  }
  const auto labels = rppg::assign_pixels(f, seeds, p);
  const auto updated = rppg::update_seeds(f, labels, moved);
  for (int i = 0; i < 4; ++i) {
    CHECK(updated[i].x == seeds[i].x);
    CHECK(updated[i].y == seeds[i].y);
    CHECK(updated[i].alive);
  }

  rppg::LabelMap all_zero(100, 100);
  std::fill(all_zero.labels.begin(), all_zero.labels.end(), 0);
  const auto one = rppg::update_seeds(f, all_zero, moved);
  CHECK(one[0].x == 50.0);
  CHECK(one[0].y == 50.0);
  CHECK(one[0].lab.l == doctest::Approx(f.at(0, 0).l).epsilon(1e-12));
  for (int i = 1; i < 4; ++i) {
    CHECK_FALSE(one[i].alive);
    CHECK(one[i].x == moved[i].x);
    CHECK(one[i].y == moved[i].y);
  }
}

TEST_CASE("enforce_connectivity absorbs orphans") {
  const auto f = two_tone(8, 8);
  const std::vector<rppg::Seed> seeds{seed_at(0, 2, 4, f.at(0, 0)), seed_at(1, 6, 4, f.at(7, 0))};
  rppg::LabelMap l(8, 8);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) l.labels[y * 8 + x] = x < 4 ? 0 : 1;
  }
  l.labels[3 * 8 + 6] = 0;  // island of 0 inside 1
  CHECK_FALSE(rppg::is_four_connected(l));
  rppg::enforce_connectivity(f, l, seeds);
  CHECK(rppg::is_four_connected(l));
  CHECK(l.at(6, 3) == 1);
  CHECK(l.at(0, 0) == 0);
}

TEST_CASE("segment_frame") {
  rppg::SegmentationParams p;
  // Complete grids: 60x40 gives 1x1, 3x2 and 6x4 cells, 100x100 gives 2x2 and 3x3.
  for (const auto& [w, h, k] : std::vector<std::array<int, 3>>{{60, 40, 1}, {60, 40, 6}, {60, 40, 24},
                                                                {100, 100, 4}, {100, 100, 9}}) {
    CAPTURE(k);
    p.k = k;
    const auto f = uniform_lab(w, h);
    const auto seeds = rppg::init_seeds(f, k);
    const auto r = rppg::segment_frame(f, seeds, p);
    CHECK(r.iterations <= 2);
    CHECK(r.labels == rppg::assign_pixels(f, seeds, p));
    CHECK(rppg::is_four_connected(r.labels));
  }
  // A truncated last row is not a Voronoi fixed point; it still stays
  // connected and within budget.
  p.k = 4;
  const auto partial = rppg::segment_frame(uniform_lab(60, 40), rppg::init_seeds(uniform_lab(60, 40), 4), p);
  CHECK(partial.iterations <= p.max_iters);
  CHECK(rppg::is_four_connected(partial.labels));

  p.k = 2;
  const auto tt = two_tone(16, 16);
  const auto r = rppg::segment_frame(tt, rppg::init_seeds(tt, 2), p);
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) CHECK(r.labels.at(x, y) == (x < 8 ? 0 : 1));
  }

  rppg::SynthConfig sc;
  p = rppg::SegmentationParams{};
  const auto frame = rppg::to_lab(rppg::render_frame(sc, 0));
  const auto full = rppg::segment_frame(frame, rppg::init_seeds(frame, p.k), p);
  CHECK(rppg::is_four_connected(full.labels));
  for (const auto v : full.labels.labels) {
    REQUIRE(v >= 0);
    CHECK(full.seeds[v].alive);
  }
}

TEST_CASE("temporal propagation") {
  rppg::SynthConfig still;
  still.duration_s = 1.0;
  still.noise_sigma = 0.0;
  still.pulse_amplitude = 0.0;
  std::vector<rppg::LabImage> frames;
  for (int i = 0; i < still.frame_count(); ++i) frames.push_back(rppg::to_lab(rppg::render_frame(still, i)));
  rppg::SegmentationParams p;
  const auto out = rppg::propagate_and_segment(frames, p);
  REQUIRE(out.size() == frames.size());
  for (const auto& r : out) {
    CHECK(r.labels == out[0].labels);
    for (std::size_t i = 0; i < r.seeds.size(); ++i) {
      CHECK(r.seeds[i].x == out[0].seeds[i].x);
      CHECK(r.seeds[i].y == out[0].seeds[i].y);
    }
  }

  // One frame: the grid seeds iterated to a fixed point without the clamp.
  auto first_params = p;
  first_params.max_iters = p.initial_iters;
  first_params.convergence_eps = 0.0;
  first_params.max_motion_cells = 0.0;
  const auto single = rppg::propagate_and_segment(std::span(frames).first(1), p);
  const auto direct = rppg::segment_frame(frames[0], rppg::init_seeds(frames[0], p.k), first_params);
  CHECK(single[0].labels == direct.labels);

  rppg::TemporalSegmenter seg(p);
  seg.push(frames[0]);
  CHECK_THROWS_AS(seg.push(uniform_lab(10, 10)), rppg::DataError);
}

TEST_CASE("seeds track a translating square") {
  rppg::SynthConfig sc;
  sc.duration_s = 1.5;
  sc.shape = rppg::PatchShape::rectangle;
  sc.patch = {20, 30, 32, 32};
  sc.noise_sigma = 0.0;
  sc.motion.kind = rppg::Motion::Kind::drift;
  sc.motion.vx = sc.fps;
  rppg::TemporalSegmenter seg(rppg::SegmentationParams{});
  for (int i = 0; i < sc.frame_count(); ++i) {
    const auto& r = seg.push(rppg::to_lab(rppg::render_frame(sc, i)));
    const auto patch = rppg::patch_at(sc, i / sc.fps);
    double sx = 0, sy = 0, n = 0;
    for (int y = 0; y < r.labels.height; ++y) {
      for (int x = 0; x < r.labels.width; ++x) {
        const auto& s = r.seeds[r.labels.at(x, y)];
        const bool in = x + 0.5 >= patch.x && x + 0.5 < patch.x + patch.w && y + 0.5 >= patch.y &&
                        y + 0.5 < patch.y + patch.h;
        if (in) {
          sx += s.x;
          sy += s.y;
          n += 1;
        }
      }
    }
    CAPTURE(i);
    CHECK(std::hypot(sx / n - (patch.x + patch.w / 2), sy / n - (patch.y + patch.h / 2)) <= 1.0);
  }
}

TEST_CASE("grid labels are fixed blocks") {
  const auto l = rppg::grid_labels(64, 32, 8);
  CHECK(l.at(0, 0) == 0);
  CHECK(l.at(63, 0) == 3);
  CHECK(l.at(0, 31) == 4);
  CHECK(l.at(63, 31) == 7);
  CHECK(rppg::is_four_connected(l));
}

TEST_CASE("parameter validation") {
  rppg::SegmentationParams p;
  p.compacity = 0;
  CHECK_THROWS_AS(p.validate(), rppg::UsageError);
  p = {};
  p.max_iters = 0;
  CHECK_THROWS_AS(p.validate(), rppg::UsageError);
}
