#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "rppg/error.hpp"
#include "rppg/image.hpp"

namespace rppg {
namespace {

cv::Mat to_bgr_mat(const RgbImage& image) {
  cv::Mat rgb(image.height, image.width, CV_8UC3, const_cast<std::uint8_t*>(image.pixels.data()));
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  return bgr;
}

RgbImage from_rgb_mat(const cv::Mat& rgb) {
  RgbImage out(rgb.cols, rgb.rows);
  for (int y = 0; y < rgb.rows; ++y) {
    const std::uint8_t* row = rgb.ptr<std::uint8_t>(y);
    std::copy(row, row + std::size_t(rgb.cols) * 3, out.pixels.begin() + std::size_t(y) * rgb.cols * 3);
  }
  return out;
}

}  // namespace

RgbImage downscale(const RgbImage& image, int factor) {
  if (factor < 1) throw UsageError("downscale factor must be >= 1");
  if (factor == 1) return image;
  const int w = std::max(1, image.width / factor);
  const int h = std::max(1, image.height / factor);
  cv::Mat src(image.height, image.width, CV_8UC3, const_cast<std::uint8_t*>(image.pixels.data()));
  cv::Mat dst;
  cv::resize(src, dst, cv::Size(w, h), 0, 0, cv::INTER_AREA);
  return from_rgb_mat(dst);
}

RgbImage read_png(const std::filesystem::path& path) {
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw DataError("cannot read image: " + path.string());
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  return from_rgb_mat(rgb);
}

void write_png(const RgbImage& image, const std::filesystem::path& path) {
  if (image.empty()) throw DataError("refusing to write empty image: " + path.string());
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), to_bgr_mat(image));
  } catch (const cv::Exception& e) {
    throw DataError("cannot write image " + path.string() + ": " + e.what());
  }
  if (!ok) throw DataError("cannot write image: " + path.string());
}

}  // namespace rppg
