#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "xclick/image_io.hpp"

namespace xclick {

// Per-pixel boundary probability in [0,1].
class EdgeMap {
 public:
  EdgeMap() = default;
  EdgeMap(int width, int height, float fill = 0.0f);
  EdgeMap(int width, int height, std::vector<float> response);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return response_.size(); }

  float at(int x, int y) const noexcept {
    return response_[static_cast<std::size_t>(y) * width_ + x];
  }
  float& at(int x, int y) noexcept { return response_[static_cast<std::size_t>(y) * width_ + x]; }
  float at(Point p) const noexcept { return at(p.x, p.y); }
  float& at(Point p) noexcept { return at(p.x, p.y); }
  std::span<const float> values() const noexcept { return response_; }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<float> response_;
};

// Default edge provider: per-channel Scharr magnitude (replicated borders),
// max over channels, divided by the image maximum. Constant images give 0.
EdgeMap gradient_edges(const RgbImage& image);

struct ImageSize {
  int width = 0;
  int height = 0;
};

// 16-bit grayscale PNG, value v encodes v / 65535.
EdgeMap load_edge_map(const std::filesystem::path& path,
                      std::optional<ImageSize> expected = std::nullopt);
void save_edge_map(const EdgeMap& map, const std::filesystem::path& path);

}  // namespace xclick
