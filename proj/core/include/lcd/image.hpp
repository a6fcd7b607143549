#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace lcd {

/// Row-major grayscale raster with luminance in [0, 1].
class GrayImage {
 public:
  /// Throws InvalidSize for a zero dimension or a pixel count mismatch, and
  /// InvalidParams for pixels outside [0, 1] or non-finite.
  GrayImage(std::size_t width, std::size_t height, std::vector<double> pixels);

  /// Constant-valued image.
  static GrayImage filled(std::size_t width, std::size_t height, double value);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::span<const double> pixels() const noexcept { return pixels_; }

  double at(std::size_t x, std::size_t y) const noexcept {
    return pixels_[y * width_ + x];
  }

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<double> pixels_;
};

/// Decodes a PNG or JPEG file. Color inputs are reduced with Rec.601 weights
/// (0.299 R + 0.587 G + 0.114 B); gray pixels (R == G == B) map exactly.
GrayImage load_grayscale(const std::filesystem::path& path);

/// Bilinear resampling with pixel-center alignment and replicated borders.
GrayImage resize_bilinear(const GrayImage& img, std::size_t out_w, std::size_t out_h);

/// Resizes so the longer side equals max_side, keeping the aspect ratio.
/// max_side == 0 returns the input unchanged.
GrayImage resize_longest_side(const GrayImage& img, std::size_t max_side);

/// Image files (.png, .jpg, .jpeg) in a directory, sorted by filename.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

}  // namespace lcd
