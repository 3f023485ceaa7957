#include "rppg/image.hpp"

namespace rppg {

RgbImage::RgbImage(int w, int h, Rgb8 fill) : width(w), height(h), pixels(std::size_t(w) * h * 3) {
  for (std::size_t i = 0; i < pixel_count(); ++i) {
    pixels[3 * i] = fill.r;
    pixels[3 * i + 1] = fill.g;
    pixels[3 * i + 2] = fill.b;
  }
}

LabImage::LabImage(int w, int h)
    : width(w), height(h), l(std::size_t(w) * h), a(std::size_t(w) * h), b(std::size_t(w) * h) {}

LabImage to_lab(const RgbImage& image) {
  LabImage out(image.width, image.height);
  const std::size_t n = image.pixel_count();
  for (std::size_t i = 0; i < n; ++i) {
    const Rgb8 c{image.pixels[3 * i], image.pixels[3 * i + 1], image.pixels[3 * i + 2]};
    const Lab v = srgb_to_lab(c);
    out.l[i] = v.l;
    out.a[i] = v.a;
    out.b[i] = v.b;
  }
  return out;
}

}  // namespace rppg
