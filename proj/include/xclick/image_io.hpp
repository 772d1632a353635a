#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "xclick/geometry.hpp"

namespace xclick {

// RGB raster with channel values in [0,1], stored as three planes.
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int width, int height);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width_) * height_; }
  bool empty() const noexcept { return pixel_count() == 0; }

  std::span<float> plane(int c) noexcept { return planes_[static_cast<std::size_t>(c)]; }
  std::span<const float> plane(int c) const noexcept {
    return planes_[static_cast<std::size_t>(c)];
  }

  void set(int x, int y, float r, float g, float b) noexcept;
  float channel(int c, int x, int y) const noexcept {
    return planes_[static_cast<std::size_t>(c)][static_cast<std::size_t>(y) * width_ + x];
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<float> planes_[3];
};

// Raw decoded PNG samples, row-major, `channels` interleaved.
struct PngData {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 8;
  std::vector<std::uint16_t> samples;
};

// With expand_palette = false, palette images yield their raw indices
// (one channel), e.g. for instance-labelled segmentation files.
PngData read_png(const std::filesystem::path& path, bool expand_palette = true);
void write_png(const std::filesystem::path& path, const PngData& data);
std::vector<std::uint8_t> encode_png(const PngData& data);

// PNG (gray, gray+alpha, RGB, RGBA, palette; 8 or 16 bit) or baseline JPEG.
RgbImage load_image(const std::filesystem::path& path);
void save_image(const std::filesystem::path& path, const RgbImage& image);

// 8-bit single channel: 0 background, 255 object, 128 ignore.
BinaryMask load_mask(const std::filesystem::path& path);
void save_mask(const std::filesystem::path& path, const BinaryMask& mask);
std::vector<std::uint8_t> encode_mask_png(const BinaryMask& mask);

}  // namespace xclick
