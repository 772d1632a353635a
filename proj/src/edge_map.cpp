#include "xclick/edge_map.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "xclick/error.hpp"
#include "xclick/kernels/kernels.hpp"

namespace xclick {

EdgeMap::EdgeMap(int width, int height, float fill) : width_(width), height_(height) {
  if (width < 0 || height < 0) throw Error(ErrorCode::InvalidArgument, "negative edge map size");
  response_.assign(static_cast<std::size_t>(width) * height, fill);
}

EdgeMap::EdgeMap(int width, int height, std::vector<float> response)
    : width_(width), height_(height), response_(std::move(response)) {
  if (response_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw Error(ErrorCode::DimensionMismatch, "edge response count does not match width*height");
  }
  for (float v : response_) {
    if (!(v >= 0.0f && v <= 1.0f)) {
      throw Error(ErrorCode::InvalidArgument, "edge response outside [0,1]");
    }
  }
}

EdgeMap gradient_edges(const RgbImage& image) {
  if (image.empty()) throw Error(ErrorCode::InvalidArgument, "gradient_edges: empty image");
  const int w = image.width();
  const int h = image.height();
  const auto& k = kernels::active();

  std::vector<float> mag_sq(image.pixel_count(), 0.0f);
  // Three padded rows per channel, replicated at every border.
  const std::size_t stride = static_cast<std::size_t>(w) + 2;
  std::vector<float> padded(stride * static_cast<std::size_t>(h));
  for (int c = 0; c < 3; ++c) {
    const auto plane = image.plane(c);
    for (int y = 0; y < h; ++y) {
      float* row = padded.data() + static_cast<std::size_t>(y) * stride;
      const float* src = plane.data() + static_cast<std::size_t>(y) * w;
      std::copy(src, src + w, row + 1);
      row[0] = src[0];
      row[w + 1] = src[w - 1];
    }
    for (int y = 0; y < h; ++y) {
      const float* up = padded.data() + static_cast<std::size_t>(std::max(y - 1, 0)) * stride;
      const float* mid = padded.data() + static_cast<std::size_t>(y) * stride;
      const float* down = padded.data() + static_cast<std::size_t>(std::min(y + 1, h - 1)) * stride;
      k.scharr_row_max_sq(up, mid, down, static_cast<std::size_t>(w),
                          mag_sq.data() + static_cast<std::size_t>(y) * w);
    }
  }

  const float peak = *std::max_element(mag_sq.begin(), mag_sq.end());
  std::vector<float> response(mag_sq.size(), 0.0f);
  if (peak > 0.0f) {
    const float inv = 1.0f / std::sqrt(peak);
    for (std::size_t i = 0; i < response.size(); ++i) {
      response[i] = mag_sq[i] == peak ? 1.0f : std::min(1.0f, std::sqrt(mag_sq[i]) * inv);
    }
  }
  return EdgeMap(w, h, std::move(response));
}

EdgeMap load_edge_map(const std::filesystem::path& path, std::optional<ImageSize> expected) {
  const PngData png = read_png(path);
  if (png.channels != 1) {
    throw Error(ErrorCode::Parse, path.string() + ": edge map must be single-channel");
  }
  if (expected && (expected->width != png.width || expected->height != png.height)) {
    throw Error(ErrorCode::DimensionMismatch,
                path.string() + ": edge map is " + std::to_string(png.width) + "x" +
                    std::to_string(png.height) + ", image is " + std::to_string(expected->width) +
                    "x" + std::to_string(expected->height));
  }
  const float scale = png.bit_depth == 16 ? 65535.0f : 255.0f;
  std::vector<float> response(png.samples.size());
  for (std::size_t i = 0; i < response.size(); ++i) response[i] = png.samples[i] / scale;
  return EdgeMap(png.width, png.height, std::move(response));
}

void save_edge_map(const EdgeMap& map, const std::filesystem::path& path) {
  PngData png{map.width(), map.height(), 1, 16, {}};
  png.samples.resize(map.size());
  const auto values = map.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    png.samples[i] = static_cast<std::uint16_t>(std::lround(values[i] * 65535.0f));
  }
  write_png(path, png);
}

}  // namespace xclick
