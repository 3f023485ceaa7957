#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "rppg/color.hpp"

namespace rppg {

// Interleaved 8-bit RGB raster, row-major.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  RgbImage() = default;
  RgbImage(int w, int h, Rgb8 fill = {});

  std::size_t pixel_count() const { return std::size_t(width) * std::size_t(height); }
  bool empty() const { return pixel_count() == 0; }

  Rgb8 at(int x, int y) const {
    const std::uint8_t* p = &pixels[(std::size_t(y) * width + x) * 3];
    return {p[0], p[1], p[2]};
  }
  void set(int x, int y, Rgb8 c) {
    std::uint8_t* p = &pixels[(std::size_t(y) * width + x) * 3];
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

// Planar CIELAB raster. Planes are separate so the SIMD distance kernel can
// stream each channel contiguously.
struct LabImage {
  int width = 0;
  int height = 0;
  std::vector<double> l;
  std::vector<double> a;
  std::vector<double> b;

  LabImage() = default;
  LabImage(int w, int h);

  std::size_t pixel_count() const { return std::size_t(width) * std::size_t(height); }
  bool empty() const { return pixel_count() == 0; }
  std::size_t index(int x, int y) const { return std::size_t(y) * width + x; }
  Lab at(int x, int y) const {
    const std::size_t i = index(x, y);
    return {l[i], a[i], b[i]};
  }
  void set(int x, int y, const Lab& c) {
    const std::size_t i = index(x, y);
    l[i] = c.l;
    a[i] = c.a;
    b[i] = c.b;
  }
};

LabImage to_lab(const RgbImage& image);

// Area-averaging downscale by an integer factor; factor 1 returns a copy.
RgbImage downscale(const RgbImage& image, int factor);

// Lossless PNG I/O. Errors carry the offending path.
RgbImage read_png(const std::filesystem::path& path);
void write_png(const RgbImage& image, const std::filesystem::path& path);

}  // namespace rppg
