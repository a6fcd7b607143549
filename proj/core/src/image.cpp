#include "lcd/image.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <string>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "lcd/error.hpp"

namespace lcd {

namespace fs = std::filesystem;

GrayImage::GrayImage(std::size_t width, std::size_t height, std::vector<double> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width_ == 0 || height_ == 0) {
    throw Error(ErrorCode::kInvalidSize, "image dimensions must be positive");
  }
  if (pixels_.size() != width_ * height_) {
    throw Error(ErrorCode::kInvalidSize,
                "pixel count " + std::to_string(pixels_.size()) + " != " +
                    std::to_string(width_) + "x" + std::to_string(height_));
  }
  for (double p : pixels_) {
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
      throw Error(ErrorCode::kInvalidParams, "pixel value outside [0,1]");
    }
  }
}

GrayImage GrayImage::filled(std::size_t width, std::size_t height, double value) {
  return GrayImage(width, height, std::vector<double>(width * height, value));
}

namespace {

enum class Container { kPng, kJpeg, kUnknown };

Container sniff(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot open " + path.string());
  }
  std::array<unsigned char, 8> head{};
  in.read(reinterpret_cast<char*>(head.data()), head.size());
  const auto got = static_cast<std::size_t>(in.gcount());
  static constexpr std::array<unsigned char, 8> kPngMagic = {0x89, 'P', 'N', 'G',
                                                             '\r', '\n', 0x1a, '\n'};
  if (got == 8 && std::equal(kPngMagic.begin(), kPngMagic.end(), head.begin())) {
    return Container::kPng;
  }
  if (got >= 3 && head[0] == 0xff && head[1] == 0xd8 && head[2] == 0xff) {
    return Container::kJpeg;
  }
  return Container::kUnknown;
}

double luminance(double r, double g, double b) {
  if (r == g && g == b) return r;
  return std::clamp(0.299 * r + 0.587 * g + 0.114 * b, 0.0, 1.0);
}

template <typename T>
std::vector<double> to_luminance(const cv::Mat& mat, double scale) {
  const auto w = static_cast<std::size_t>(mat.cols);
  const auto h = static_cast<std::size_t>(mat.rows);
  const int channels = mat.channels();
  std::vector<double> out(w * h);
  for (std::size_t y = 0; y < h; ++y) {
    const T* row = mat.ptr<T>(static_cast<int>(y));
    for (std::size_t x = 0; x < w; ++x) {
      const T* px = row + x * static_cast<std::size_t>(channels);
      double v;
      if (channels == 1 || channels == 2) {
        v = px[0] / scale;
      } else {
        // OpenCV stores color as BGR(A).
        v = luminance(px[2] / scale, px[1] / scale, px[0] / scale);
      }
      out[y * w + x] = v;
    }
  }
  return out;
}

}  // namespace

GrayImage load_grayscale(const fs::path& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) {
    throw Error(ErrorCode::kIo, "no such file: " + path.string());
  }
  if (sniff(path) == Container::kUnknown) {
    throw Error(ErrorCode::kDecode, "not a PNG or JPEG file: " + path.string());
  }
  cv::Mat mat;
  try {
    mat = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  } catch (const cv::Exception& e) {
    throw Error(ErrorCode::kDecode, path.string() + ": " + e.what());
  }
  if (mat.empty()) {
    throw Error(ErrorCode::kDecode, "cannot decode " + path.string());
  }
  const auto w = static_cast<std::size_t>(mat.cols);
  const auto h = static_cast<std::size_t>(mat.rows);
  switch (mat.depth()) {
    case CV_8U:
      return GrayImage(w, h, to_luminance<std::uint8_t>(mat, 255.0));
    case CV_16U:
      return GrayImage(w, h, to_luminance<std::uint16_t>(mat, 65535.0));
    default:
      throw Error(ErrorCode::kDecode, "unsupported pixel depth in " + path.string());
  }
}

GrayImage resize_bilinear(const GrayImage& img, std::size_t out_w, std::size_t out_h) {
  if (out_w == 0 || out_h == 0) {
    throw Error(ErrorCode::kInvalidSize, "resize target must be positive");
  }
  const std::size_t in_w = img.width();
  const std::size_t in_h = img.height();
  const double sx = static_cast<double>(in_w) / static_cast<double>(out_w);
  const double sy = static_cast<double>(in_h) / static_cast<double>(out_h);

  struct Tap {
    std::size_t i0, i1;
    double frac;
  };
  auto taps = [](std::size_t out_n, std::size_t in_n, double scale) {
    std::vector<Tap> t(out_n);
    const double max_pos = static_cast<double>(in_n - 1);
    for (std::size_t o = 0; o < out_n; ++o) {
      double pos = (static_cast<double>(o) + 0.5) * scale - 0.5;
      pos = std::clamp(pos, 0.0, max_pos);
      const auto i0 = static_cast<std::size_t>(std::floor(pos));
      const std::size_t i1 = std::min(i0 + 1, in_n - 1);
      t[o] = {i0, i1, pos - static_cast<double>(i0)};
    }
    return t;
  };
  const auto tx = taps(out_w, in_w, sx);
  const auto ty = taps(out_h, in_h, sy);

  std::vector<double> out(out_w * out_h);
  for (std::size_t y = 0; y < out_h; ++y) {
    const Tap& vy = ty[y];
    for (std::size_t x = 0; x < out_w; ++x) {
      const Tap& vx = tx[x];
      const double top = img.at(vx.i0, vy.i0) * (1.0 - vx.frac) + img.at(vx.i1, vy.i0) * vx.frac;
      const double bot = img.at(vx.i0, vy.i1) * (1.0 - vx.frac) + img.at(vx.i1, vy.i1) * vx.frac;
      out[y * out_w + x] = std::clamp(top * (1.0 - vy.frac) + bot * vy.frac, 0.0, 1.0);
    }
  }
  return GrayImage(out_w, out_h, std::move(out));
}

GrayImage resize_longest_side(const GrayImage& img, std::size_t max_side) {
  if (max_side == 0) return img;
  const std::size_t longest = std::max(img.width(), img.height());
  if (longest == max_side) return img;
  const double s = static_cast<double>(max_side) / static_cast<double>(longest);
  const auto w = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(img.width() * s)));
  const auto h = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(img.height() * s)));
  return resize_bilinear(img, w, h);
}

std::vector<fs::path> list_images(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw Error(ErrorCode::kIo, "not a directory: " + dir.string());
  }
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace lcd
