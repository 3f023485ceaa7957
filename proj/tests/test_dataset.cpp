#include <algorithm>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "rppg/dataset.hpp"
#include "rppg/error.hpp"
#include "rppg/rng.hpp"
#include "support.hpp"

namespace {

std::vector<rppg::HrSample> gt_text(const std::string& text) {
  std::istringstream in(text);
  return rppg::parse_ground_truth(in, "gt");
}

void write_frames(const std::filesystem::path& dir, std::initializer_list<int> indices, double fps = 25.0) {
  std::filesystem::create_directories(dir);
  for (const int i : indices) rppg::write_png(rppg::RgbImage(4, 3, {std::uint8_t(i), 7, 9}), dir / rppg::frame_filename(i));
  rppg::Manifest m;
  m.fps = fps;
  m.subject = "s1";
  rppg::write_manifest(m, dir / rppg::kManifestFile);
}

rppg::SpatioTemporalMap window_map(double clip_start, double window_start, double len) {
  rppg::SpatioTemporalMap m;
  m.k = 1;
  m.t = 1;
  m.values.assign(3, 0.0);
  m.clip_start_s = clip_start;
  m.window_start_s = window_start;
  m.window_len_s = len;
  return m;
}

}  // namespace

TEST_CASE("manifest round trip and errors") {
  testing::TempDir tmp("manifest");
  rppg::Manifest m;
  m.fps = 29.97;
  m.subject = "p07";
  m.frames = 12;
  m.notes = "lab session";
  rppg::write_manifest(m, tmp / "manifest");
  const auto back = rppg::read_manifest(tmp / "manifest");
  CHECK(back.fps == 29.97);
  CHECK(back.subject == "p07");
  CHECK(back.frames == 12);
  CHECK(back.notes == "lab session");

  std::ofstream(tmp / "bad1") << "fps = 30\ncolour = red\n";
  CHECK_THROWS_WITH_AS(rppg::read_manifest(tmp / "bad1"), doctest::Contains(":2:"), rppg::DataError);
  std::ofstream(tmp / "bad2") << "subject = x\n";
  CHECK_THROWS_WITH_AS(rppg::read_manifest(tmp / "bad2"), doctest::Contains("fps"), rppg::DataError);
  std::ofstream(tmp / "bad3") << "fps = -2\n";
  CHECK_THROWS_AS(rppg::read_manifest(tmp / "bad3"), rppg::DataError);
  CHECK_THROWS_AS(rppg::read_manifest(tmp / "none"), rppg::DataError);
}

TEST_CASE("frame directories") {
  testing::TempDir tmp("frames");
  CHECK(rppg::frame_filename(5) == "000005.png");

  write_frames(tmp / "ok", {0, 1, 2, 3});
  const rppg::FrameDirectory fd(tmp / "ok");
  CHECK(fd.size() == 4);
  CHECK(fd.manifest().fps == 25.0);
  CHECK(fd.read(2).at(0, 0) == rppg::Rgb8{2, 7, 9});
  CHECK_THROWS_AS(fd.read(4), rppg::DataError);
  const auto seq = rppg::load_frames(tmp / "ok");
  CHECK(seq.frames.size() == 4);
  CHECK(seq.subject == "s1");

  write_frames(tmp / "gap", {0, 1, 2, 3, 4, 6});
  CHECK_THROWS_WITH_AS(rppg::FrameDirectory(tmp / "gap"), doctest::Contains("frame 5 missing"), rppg::DataError);

  write_frames(tmp / "empty", {});
  CHECK_THROWS_AS(rppg::FrameDirectory(tmp / "empty"), rppg::DataError);
  CHECK_THROWS_AS(rppg::FrameDirectory(tmp / "absent"), rppg::DataError);
}

TEST_CASE("ground truth parsing") {
  const auto two = gt_text("0,80\n1,82");
  REQUIRE(two.size() == 2);
  CHECK(two[1] == rppg::HrSample{1, 82.0});
  CHECK(gt_text(" 3 , 71.5 \n\n4,72\n").size() == 2);

  CHECK_THROWS_WITH_AS(gt_text("1,80\n0,82"), doctest::Contains("gt:2"), rppg::DataError);
  CHECK_THROWS_WITH_AS(gt_text("0,300"), doctest::Contains("[30, 250]"), rppg::DataError);
  CHECK_THROWS_WITH_AS(gt_text("0,80\n1,82\n2 82"), doctest::Contains("gt:3"), rppg::DataError);
  CHECK_THROWS_AS(gt_text("x,80"), rppg::DataError);
  CHECK_THROWS_AS(gt_text("0,abc"), rppg::DataError);
}

TEST_CASE("window labels") {
  std::vector<rppg::HrSample> flat;
  for (int s = 0; s < 10; ++s) flat.push_back({s, 80.0});
  CHECK(*rppg::window_label(flat, 0.0, 10.0) == 80.0);

  std::vector<rppg::HrSample> rising;
  for (int s = 0; s < 10; ++s) rising.push_back({s, 60.0 + s});
  CHECK(*rppg::window_label(rising, 0.0, 10.0) == doctest::Approx(64.5));
  // Seconds 3..7 for a window starting at 2.5.
  CHECK(*rppg::window_label(rising, 2.5, 5.0) == doctest::Approx(65.0));
  CHECK_FALSE(rppg::window_label(rising, 1.0, 10.0).has_value());

  std::vector<rppg::HrSample> holed = rising;
  holed.erase(holed.begin() + 4);
  CHECK_FALSE(rppg::window_label(holed, 0.0, 10.0).has_value());
  CHECK(*rppg::window_label(holed, 5.0, 5.0) == doctest::Approx(67.0));

  std::vector<rppg::SpatioTemporalMap> maps{window_map(0, 0, 10), window_map(0, 0.5, 10), window_map(5, 2, 3)};
  const auto r = rppg::label_maps(maps, rising);
  CHECK(r.dropped == 1);
  REQUIRE(r.labeled.size() == 2);
  CHECK(r.labeled[0].bpm == doctest::Approx(64.5));
  CHECK(r.labeled[1].bpm == doctest::Approx(68.0));
}

TEST_CASE("labels stay inside the window's ground-truth range") {
  std::mt19937_64 g = rppg::rng::substream(11, 0);
  std::vector<rppg::HrSample> gt;
  for (int s = 0; s < 60; ++s) gt.push_back({s, rppg::rng::uniform(g, 40, 200)});
  for (int trial = 0; trial < 200; ++trial) {
    const double start = rppg::rng::uniform(g, 0, 50);
    const double len = rppg::rng::uniform(g, 1, 10);
    const auto label = rppg::window_label(gt, start, len);
    if (!label) continue;
    double lo = 1e9, hi = -1e9;
    for (const auto& s : gt) {
      if (s.t_s >= start && s.t_s < start + len) {
        lo = std::min(lo, s.bpm);
        hi = std::max(hi, s.bpm);
      }
    }
    CHECK(*label >= lo - 1e-9);
    CHECK(*label <= hi + 1e-9);
  }
}

TEST_CASE("metrics") {
  {
    const std::vector<double> p{100, 110}, t{110, 100};
    const auto r = rppg::compute_metrics(p, t);
    CHECK(r.mae == 10.0);
    CHECK(r.rmse == 10.0);
    CHECK(r.n_maps == 2);
  }
  {
    const std::vector<double> p{72, 91, 130};
    const auto r = rppg::compute_metrics(p, p);
    CHECK(r.mae == 0.0);
    CHECK(r.rmse == 0.0);
  }
  {
    const std::vector<double> p{0}, t{3};
    const auto r = rppg::compute_metrics(p, t);
    CHECK(r.mae == 3.0);
    CHECK(r.rmse == 3.0);
  }
  const std::vector<double> a{1, 2, 3}, b{1, 2};
  CHECK_THROWS_AS(rppg::compute_metrics(a, b), rppg::UsageError);
  CHECK_THROWS_AS(rppg::compute_metrics(std::vector<double>{}, std::vector<double>{}), rppg::UsageError);

  // Paired shuffles leave both metrics unchanged.
  std::mt19937_64 g = rppg::rng::substream(4, 4);
  std::vector<double> p(50), t(50);
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = rppg::rng::uniform(g, 50, 150);
    t[i] = rppg::rng::uniform(g, 50, 150);
  }
  const auto before = rppg::compute_metrics(p, t);
  std::vector<std::size_t> order(p.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), g);
  std::vector<double> ps, ts;
  for (const auto i : order) {
    ps.push_back(p[i]);
    ts.push_back(t[i]);
  }
  const auto after = rppg::compute_metrics(ps, ts);
  CHECK(after.mae == doctest::Approx(before.mae).epsilon(1e-12));
  CHECK(after.rmse == doctest::Approx(before.rmse).epsilon(1e-12));
  CHECK(before.rmse >= before.mae);
}

TEST_CASE("split files") {
  std::istringstream ok("train: a b,c\ntest: d\n");
  const auto s = rppg::parse_split(ok);
  CHECK(s.train == std::vector<std::string>{"a", "b", "c"});
  CHECK(s.test == std::vector<std::string>{"d"});
  CHECK(s.in_train("b"));
  CHECK_FALSE(s.in_train("d"));
  CHECK(s.in_test("d"));

  std::istringstream leak("train: a b\ntest: b\n");
  CHECK_THROWS_WITH_AS(rppg::parse_split(leak), doctest::Contains("'b'"), rppg::UsageError);
  std::istringstream one_sided("train: a\n");
  CHECK_THROWS_AS(rppg::parse_split(one_sided), rppg::UsageError);
  std::istringstream junk("train a\n");
  CHECK_THROWS_AS(rppg::parse_split(junk), rppg::DataError);
  std::istringstream side("validation: a\n");
  CHECK_THROWS_AS(rppg::parse_split(side), rppg::DataError);
}

TEST_CASE("video discovery") {
  testing::TempDir tmp("discover");
  write_frames(tmp / "b", {0});
  write_frames(tmp / "a", {0});
  std::filesystem::create_directories(tmp / "notes");
  const auto found = rppg::discover_videos(tmp.path());
  REQUIRE(found.size() == 2);
  CHECK(found[0].filename() == "a");
  CHECK(found[1].filename() == "b");
  CHECK(rppg::discover_videos(tmp / "a") == std::vector<std::filesystem::path>{tmp / "a"});
  CHECK_THROWS_AS(rppg::discover_videos(tmp / "notes"), rppg::DataError);
  CHECK_THROWS_AS(rppg::discover_videos(tmp / "missing"), rppg::DataError);
}
