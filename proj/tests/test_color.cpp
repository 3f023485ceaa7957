#include <cmath>

#include "doctest.h"
#include "rppg/color.hpp"
#include "rppg/image.hpp"

using doctest::Approx;

TEST_CASE("sRGB linearization endpoints and monotonicity") {
  CHECK(rppg::srgb_to_linear(0) == 0.0);
  CHECK(rppg::srgb_to_linear(255) == Approx(1.0).epsilon(1e-12));
  // Linear segment below the knee.
  CHECK(rppg::srgb_to_linear(10) == Approx(10.0 / 255.0 / 12.92).epsilon(1e-12));
  for (int c = 1; c < 256; ++c) CHECK(rppg::srgb_to_linear(c) > rppg::srgb_to_linear(c - 1));
}

TEST_CASE("Lab of white, gray and reference colours") {
  const auto white = rppg::srgb_to_lab({255, 255, 255});
  CHECK(white.l == Approx(100.0).epsilon(1e-4));
  CHECK(std::abs(white.a) < 1e-2);
  CHECK(std::abs(white.b) < 1e-2);

  const auto black = rppg::srgb_to_lab({0, 0, 0});
  CHECK(std::abs(black.l) < 1e-9);

  for (int g = 0; g < 256; g += 17) {
    const auto v = static_cast<std::uint8_t>(g);
    const auto lab = rppg::srgb_to_lab({v, v, v});
    CHECK(std::abs(lab.a) < 1e-6);
    CHECK(std::abs(lab.b) < 1e-6);
  }

  // Reference values from an independent CIELAB implementation (D65, 2 deg).
  struct Ref {
    rppg::Rgb8 rgb;
    double l, a, b;
  };
  const Ref refs[] = {
      {{119, 119, 119}, 50.0344, 0.0, 0.0},
      {{200, 150, 120}, 66.098, 14.850, 23.133},
      {{10, 200, 30}, 70.500, -70.514, 64.941},
  };
  for (const auto& r : refs) {
    const auto lab = rppg::srgb_to_lab(r.rgb);
    CHECK(std::abs(lab.l - r.l) < 0.05);
    CHECK(std::abs(lab.a - r.a) < 0.02);
    CHECK(std::abs(lab.b - r.b) < 0.02);
  }
}

TEST_CASE("YUV constants and reference colours") {
  CHECK(rppg::bt601::kU == Approx(0.4920993).epsilon(1e-6));
  CHECK(rppg::bt601::kV == Approx(0.8773181).epsilon(1e-6));

  const auto red = rppg::rgb_to_yuv(rppg::Rgb8{255, 0, 0});
  CHECK(red.y == Approx(76.245).epsilon(1e-9));
  CHECK(red.u == Approx(-37.5201).epsilon(1e-5));
  CHECK(red.v == Approx(156.825).epsilon(1e-5));

  const auto green = rppg::rgb_to_yuv(rppg::Rgb8{0, 255, 0});
  CHECK(green.y == Approx(149.685).epsilon(1e-9));
  CHECK(green.u == Approx(-73.6599).epsilon(1e-5));
  CHECK(green.v == Approx(-131.3214).epsilon(1e-5));

  for (int g = 0; g < 256; ++g) {
    const double v = g;
    const auto yuv = rppg::rgb_to_yuv(rppg::Rgb{v, v, v});
    CHECK(yuv.y == Approx(v).epsilon(1e-12));
    CHECK(yuv.u == 0.0);
    CHECK(yuv.v == 0.0);
  }

  // Real-valued and 8-bit overloads agree.
  const auto a = rppg::rgb_to_yuv(rppg::Rgb8{12, 200, 99});
  const auto b = rppg::rgb_to_yuv(rppg::Rgb{12.0, 200.0, 99.0});
  CHECK(a.y == b.y);
  CHECK(a.u == b.u);
  CHECK(a.v == b.v);
}

TEST_CASE("lab_distance is Euclidean") {
  CHECK(rppg::lab_distance({50, 0, 0}, {50, 3, 4}) == 5.0);
  CHECK(rppg::lab_distance({1, 2, 3}, {1, 2, 3}) == 0.0);
}

TEST_CASE("to_lab matches per-pixel conversion") {
  rppg::RgbImage img(3, 2);
  img.set(0, 0, {255, 0, 0});
  img.set(2, 1, {10, 200, 30});
  const auto lab = rppg::to_lab(img);
  for (int y = 0; y < 2; ++y) {
    for (int x = 0; x < 3; ++x) {
      const auto want = rppg::srgb_to_lab(img.at(x, y));
      CHECK(lab.at(x, y).l == want.l);
      CHECK(lab.at(x, y).a == want.a);
      CHECK(lab.at(x, y).b == want.b);
    }
  }
}

TEST_CASE("downscale averages blocks") {
  rppg::RgbImage img(4, 2);
  img.set(0, 0, {100, 0, 0});
  img.set(1, 0, {200, 0, 0});
  img.set(0, 1, {100, 0, 0});
  img.set(1, 1, {200, 0, 0});
  const auto half = rppg::downscale(img, 2);
  REQUIRE(half.width == 2);
  REQUIRE(half.height == 1);
  CHECK(half.at(0, 0).r == 150);
  CHECK(half.at(1, 0).r == 0);
  CHECK(rppg::downscale(img, 1) == img);
}
