#pragma once

#include <array>
#include <vector>

#include "xclick/edge_map.hpp"
#include "xclick/geometry.hpp"

namespace xclick {

// 8-connected pixel chain. `bottleneck` is the smallest edge response on it.
struct PixelPath {
  std::vector<Point> pixels;
  float bottleneck = 0.0f;

  std::size_t steps() const noexcept { return pixels.empty() ? 0 : pixels.size() - 1; }
};

enum class PathObjective {
  // Maximize the minimum edge response, then minimize pixel count.
  Maximin,
  // Minimize sum of (1 - e_p) over path pixels; kept for comparison.
  MinSumComplement,
};

// Neighbor scan order used by every search: E, SE, S, SW, W, NW, N, NE.
inline constexpr std::array<Point, 8> kNeighborOrder = {
    Point{1, 0}, Point{1, 1}, Point{0, 1}, Point{-1, 1},
    Point{-1, 0}, Point{-1, -1}, Point{0, -1}, Point{1, -1}};

PixelPath maximin_path(const EdgeMap& edges, Point from, Point to, const BoundingBox& region);
PixelPath min_sum_complement_path(const EdgeMap& edges, Point from, Point to,
                                  const BoundingBox& region);

struct SurfaceEstimate {
  // left->top, top->right, right->bottom, bottom->left
  std::array<PixelPath, 4> contour;
  BinaryMask surface;
  BinaryMask skeleton;
  BoundingBox region;
};

struct SurfaceOptions {
  int margin = 5;
  PathObjective objective = PathObjective::Maximin;
};

SurfaceEstimate estimate_surface(const ExtremeClicks& clicks, const EdgeMap& edges,
                                 const SurfaceOptions& options = {});

// Zhang-Suen thinning. Candidates are only removed while they are still simple
// points, so the number of 8-connected components never changes.
BinaryMask skeletonize(const BinaryMask& mask);

}  // namespace xclick
