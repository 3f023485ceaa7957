#include "rppg/color.hpp"

#include <array>
#include <cmath>

namespace rppg {
namespace {

// IEC 61966-2-1 linear sRGB -> XYZ (D65).
constexpr double kM[3][3] = {
    {0.4124564, 0.3575761, 0.1804375},
    {0.2126729, 0.7151522, 0.0721750},
    {0.0193339, 0.1191920, 0.9503041},
};

// Reference white = XYZ of sRGB white under kM, so r=g=b maps to a=b=0.
constexpr double kWhiteX = kM[0][0] + kM[0][1] + kM[0][2];
constexpr double kWhiteY = kM[1][0] + kM[1][1] + kM[1][2];
constexpr double kWhiteZ = kM[2][0] + kM[2][1] + kM[2][2];

constexpr double kEpsilon = 216.0 / 24389.0;
constexpr double kKappa = 24389.0 / 27.0;

const std::array<double, 256>& linear_table() {
  static const std::array<double, 256> table = [] {
    std::array<double, 256> t{};
    for (int i = 0; i < 256; ++i) {
      const double c = i / 255.0;
      t[i] = c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
    }
    return t;
  }();
  return table;
}

double lab_f(double t) {
  return t > kEpsilon ? std::cbrt(t) : (kKappa * t + 16.0) / 116.0;
}

}  // namespace

double srgb_to_linear(std::uint8_t c) { return linear_table()[c]; }

Lab srgb_to_lab(Rgb8 c) {
  const auto& lin = linear_table();
  const double r = lin[c.r];
  const double g = lin[c.g];
  const double b = lin[c.b];
  const double x = (kM[0][0] * r + kM[0][1] * g + kM[0][2] * b) / kWhiteX;
  const double y = (kM[1][0] * r + kM[1][1] * g + kM[1][2] * b) / kWhiteY;
  const double z = (kM[2][0] * r + kM[2][1] * g + kM[2][2] * b) / kWhiteZ;
  const double fx = lab_f(x);
  const double fy = lab_f(y);
  const double fz = lab_f(z);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

Yuv rgb_to_yuv(const Rgb& c) {
  // Algebraically 0.299r + 0.587g + 0.114b, arranged so r=g=b gives y == g
  // exactly and therefore zero chroma.
  const double y = c.g + bt601::kR * (c.r - c.g) + bt601::kB * (c.b - c.g);
  return {y, bt601::kU * (c.b - y), bt601::kV * (c.r - y)};
}

Yuv rgb_to_yuv(Rgb8 c) { return rgb_to_yuv(Rgb{double(c.r), double(c.g), double(c.b)}); }

double lab_distance(const Lab& p, const Lab& q) {
  const double dl = p.l - q.l;
  const double da = p.a - q.a;
  const double db = p.b - q.b;
  return std::sqrt(dl * dl + da * da + db * db);
}

}  // namespace rppg
