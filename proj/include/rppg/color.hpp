#pragma once

#include <cstdint>

namespace rppg {

struct Rgb8 {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb8&, const Rgb8&) = default;
};

// Real-valued RGB on the 0..255 scale, e.g. a mean over a pixel region.
struct Rgb {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;
};

// CIELAB, D65 reference white, 2 degree observer.
struct Lab {
  double l = 0.0;
  double a = 0.0;
  double b = 0.0;
};

// Full-range BT.601 luma on 0..255 with zero-centred chroma.
struct Yuv {
  double y = 0.0;
  double u = 0.0;
  double v = 0.0;
};

namespace bt601 {
inline constexpr double kR = 0.299;
inline constexpr double kG = 0.587;
inline constexpr double kB = 0.114;
// U = kU * (B - Y), V = kV * (R - Y)
inline constexpr double kU = 0.436 / (1.0 - kB);
inline constexpr double kV = 0.615 / (1.0 - kR);
}  // namespace bt601

// sRGB gamma expansion of one 8-bit channel to linear [0,1].
double srgb_to_linear(std::uint8_t c);

Lab srgb_to_lab(Rgb8 c);

Yuv rgb_to_yuv(Rgb8 c);
Yuv rgb_to_yuv(const Rgb& c);

// Euclidean distance in Lab.
double lab_distance(const Lab& p, const Lab& q);

}  // namespace rppg
