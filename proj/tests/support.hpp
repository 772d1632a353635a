#pragma once

// Test-only fixture generators. Nothing here calls into the code under test
// except for constructing plain data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include "xclick/edge_map.hpp"
#include "xclick/geometry.hpp"
#include "xclick/image_io.hpp"

namespace xclick::testing {

// Union of a few random ellipses inside a random canvas.
inline BinaryMask random_blob_mask(std::mt19937_64& rng, int max_side = 40) {
  std::uniform_int_distribution<int> side(3, max_side);
  const int w = side(rng);
  const int h = side(rng);
  BinaryMask mask(w, h);
  std::uniform_int_distribution<int> blobs(1, 4);
  std::uniform_real_distribution<double> ux(0.0, w - 1.0);
  std::uniform_real_distribution<double> uy(0.0, h - 1.0);
  std::uniform_real_distribution<double> ur(0.5, std::max(1.0, std::min(w, h) / 2.5));
  const int n = blobs(rng);
  for (int k = 0; k < n; ++k) {
    const double cx = ux(rng), cy = uy(rng), rx = ur(rng), ry = ur(rng);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double dx = (x - cx) / rx, dy = (y - cy) / ry;
        if (dx * dx + dy * dy <= 1.0) mask.at(x, y) = Label::Object;
      }
  }
  if (mask.count(Label::Object) == 0) {
    mask.at(static_cast<int>(ux(rng)), static_cast<int>(uy(rng))) = Label::Object;
  }
  return mask;
}

// Random mask with scattered pixels, including ignore labels.
inline BinaryMask random_noise_mask(std::mt19937_64& rng, int w, int h, double p_object,
                                    double p_ignore = 0.0) {
  BinaryMask mask(w, h);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const double v = u(rng);
    mask[i] = v < p_object ? Label::Object : (v < p_object + p_ignore ? Label::Ignore
                                                                      : Label::Background);
  }
  return mask;
}

struct Rgb {
  float r, g, b;
};

// Paint `fg` where mask is object and `bg` elsewhere, plus optional noise.
inline RgbImage paint(const BinaryMask& mask, Rgb fg, Rgb bg, double noise_sigma = 0.0,
                      std::uint64_t seed = 7) {
  RgbImage img(mask.width(), mask.height());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, noise_sigma > 0 ? noise_sigma : 1.0);
  auto jitter = [&](float v) {
    if (noise_sigma <= 0) return v;
    return static_cast<float>(std::clamp(v + noise(rng), 0.0, 1.0));
  };
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x) {
      const Rgb c = mask.is_object(x, y) ? fg : bg;
      const float r = jitter(c.r), g = jitter(c.g), b = jitter(c.b);
      img.set(x, y, r, g, b);
    }
  return img;
}

inline BinaryMask rect_mask(int w, int h, int x0, int y0, int x1, int y1) {
  BinaryMask m(w, h);
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) m.at(x, y) = Label::Object;
  return m;
}

// 64x64 red square (rows/cols 16..47) on blue.
inline BinaryMask square_fixture_mask() { return rect_mask(64, 64, 16, 16, 47, 47); }

// L shape: vertical bar on the left plus a bar along the bottom. The box
// center falls in the empty upper-right part.
inline BinaryMask l_fixture_mask() {
  BinaryMask m(64, 64);
  for (int y = 8; y <= 55; ++y)
    for (int x = 8; x <= 55; ++x) {
      const bool vertical = x <= 21;
      const bool horizontal = y >= 42;
      if (vertical || horizontal) m.at(x, y) = Label::Object;
    }
  return m;
}

inline BinaryMask mirrored_l_fixture_mask() {
  const BinaryMask l = l_fixture_mask();
  BinaryMask m(64, 64);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) m.at(63 - x, y) = l.at(x, y);
  return m;
}

// Two uprights joined along the bottom.
inline BinaryMask u_fixture_mask() {
  BinaryMask m(64, 64);
  for (int y = 8; y <= 55; ++y)
    for (int x = 8; x <= 55; ++x)
      if (x <= 19 || x >= 44 || y >= 44) m.at(x, y) = Label::Object;
  return m;
}

inline constexpr Rgb kRed{0.85f, 0.15f, 0.1f};
inline constexpr Rgb kBlue{0.1f, 0.2f, 0.8f};

}  // namespace xclick::testing
