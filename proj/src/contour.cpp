#include "xclick/contour.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <queue>
#include <string>
#include <tuple>

#include "xclick/error.hpp"

namespace xclick {
namespace {

struct RegionGrid {
  BoundingBox box;

  int width() const noexcept { return box.width(); }
  std::size_t size() const noexcept { return static_cast<std::size_t>(box.area()); }
  std::size_t index(Point p) const noexcept {
    return static_cast<std::size_t>(p.y - box.y_min) * width() + (p.x - box.x_min);
  }
  Point point(std::size_t i) const noexcept {
    return {box.x_min + static_cast<int>(i % width()), box.y_min + static_cast<int>(i / width())};
  }
};

void check_path_args(const EdgeMap& edges, Point from, Point to, const BoundingBox& region) {
  if (!region.valid() || region.x_min < 0 || region.y_min < 0 || region.x_max >= edges.width() ||
      region.y_max >= edges.height()) {
    throw Error(ErrorCode::OutOfBounds, "path search region lies outside the edge map");
  }
  if (!region.contains(from) || !region.contains(to)) {
    throw Error(ErrorCode::OutOfBounds, "path endpoints must lie inside the search region");
  }
}

PixelPath trace(const RegionGrid& grid, const std::vector<std::size_t>& parent, Point from,
                Point to, const EdgeMap& edges) {
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  PixelPath path;
  std::size_t at = grid.index(to);
  const std::size_t start = grid.index(from);
  while (true) {
    path.pixels.push_back(grid.point(at));
    if (at == start) break;
    at = parent[at];
    if (at == kNone) throw Error(ErrorCode::Internal, "broken parent chain in path search");
  }
  std::reverse(path.pixels.begin(), path.pixels.end());
  path.bottleneck = std::numeric_limits<float>::infinity();
  for (Point p : path.pixels) path.bottleneck = std::min(path.bottleneck, edges.at(p));
  return path;
}

}  // namespace

PixelPath maximin_path(const EdgeMap& edges, Point from, Point to, const BoundingBox& region) {
  check_path_args(edges, from, to, region);
  const RegionGrid grid{region};
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  // Widest-path search: best[v] is the largest bottleneck of any path to v.
  std::vector<float> best(grid.size(), -1.0f);
  std::vector<char> done(grid.size(), 0);
  using Item = std::pair<float, std::size_t>;
  auto lower = [](const Item& a, const Item& b) {
    return a.first < b.first || (a.first == b.first && a.second > b.second);
  };
  std::priority_queue<Item, std::vector<Item>, decltype(lower)> frontier(lower);
  const std::size_t start = grid.index(from);
  const std::size_t goal = grid.index(to);
  best[start] = edges.at(from);
  frontier.push({best[start], start});
  while (!frontier.empty()) {
    const auto [width, v] = frontier.top();
    frontier.pop();
    if (done[v]) continue;
    done[v] = 1;
    if (v == goal) break;
    const Point pv = grid.point(v);
    for (Point d : kNeighborOrder) {
      const Point pu{pv.x + d.x, pv.y + d.y};
      if (!region.contains(pu)) continue;
      const std::size_t u = grid.index(pu);
      const float cand = std::min(width, edges.at(pu));
      if (!done[u] && cand > best[u]) {
        best[u] = cand;
        frontier.push({cand, u});
      }
    }
  }
  const float bottleneck = best[goal];
  if (bottleneck < 0.0f) throw Error(ErrorCode::Internal, "no path inside a connected region");

  // Fewest pixels among paths that never drop below the bottleneck.
  std::vector<std::size_t> parent(grid.size(), kNone);
  std::vector<char> seen(grid.size(), 0);
  std::deque<std::size_t> queue{start};
  seen[start] = 1;
  while (!queue.empty()) {
    const std::size_t v = queue.front();
    queue.pop_front();
    if (v == goal) break;
    const Point pv = grid.point(v);
    for (Point d : kNeighborOrder) {
      const Point pu{pv.x + d.x, pv.y + d.y};
      if (!region.contains(pu) || edges.at(pu) < bottleneck) continue;
      const std::size_t u = grid.index(pu);
      if (seen[u]) continue;
      seen[u] = 1;
      parent[u] = v;
      queue.push_back(u);
    }
  }
  return trace(grid, parent, from, to, edges);
}

PixelPath min_sum_complement_path(const EdgeMap& edges, Point from, Point to,
                                  const BoundingBox& region) {
  check_path_args(edges, from, to, region);
  const RegionGrid grid{region};
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  constexpr double kInf = std::numeric_limits<double>::infinity();

  // Cost counts every pixel on the path, endpoints included; ties prefer fewer steps.
  using Cost = std::pair<double, int>;
  std::vector<Cost> dist(grid.size(), {kInf, 0});
  std::vector<std::size_t> parent(grid.size(), kNone);
  using Item = std::tuple<double, int, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> frontier;
  const std::size_t start = grid.index(from);
  const std::size_t goal = grid.index(to);
  dist[start] = {1.0 - edges.at(from), 0};
  frontier.push({dist[start].first, 0, start});
  while (!frontier.empty()) {
    const auto [cost, steps, v] = frontier.top();
    frontier.pop();
    if (Cost{cost, steps} != dist[v]) continue;
    if (v == goal) break;
    const Point pv = grid.point(v);
    for (Point d : kNeighborOrder) {
      const Point pu{pv.x + d.x, pv.y + d.y};
      if (!region.contains(pu)) continue;
      const std::size_t u = grid.index(pu);
      const Cost cand{cost + (1.0 - edges.at(pu)), steps + 1};
      if (cand < dist[u]) {
        dist[u] = cand;
        parent[u] = v;
        frontier.push({cand.first, cand.second, u});
      }
    }
  }
  return trace(grid, parent, from, to, edges);
}

SurfaceEstimate estimate_surface(const ExtremeClicks& clicks, const EdgeMap& edges,
                                 const SurfaceOptions& options) {
  for (const Point& p : clicks.points) {
    if (p.x < 0 || p.y < 0 || p.x >= edges.width() || p.y >= edges.height()) {
      throw Error(ErrorCode::OutOfBounds, "click outside the edge map");
    }
  }
  if (options.margin < 0) throw Error(ErrorCode::InvalidArgument, "negative search margin");

  const BoundingBox box = box_from_clicks(clicks);
  SurfaceEstimate est;
  est.region = box.dilated(options.margin, edges.width(), edges.height());
  est.surface = BinaryMask(edges.width(), edges.height());

  const std::array<Role, 5> ring = {Role::Left, Role::Top, Role::Right, Role::Bottom, Role::Left};
  for (std::size_t i = 0; i < 4; ++i) {
    const Point a = clicks.at(ring[i]);
    const Point b = clicks.at(ring[i + 1]);
    est.contour[i] = options.objective == PathObjective::Maximin
                         ? maximin_path(edges, a, b, est.region)
                         : min_sum_complement_path(edges, a, b, est.region);
    for (Point p : est.contour[i].pixels) est.surface.at(p.x, p.y) = Label::Object;
  }

  // Everything 4-reachable from the region border without touching the
  // contour is exterior; the rest of the region is the surface.
  const RegionGrid grid{est.region};
  std::vector<char> exterior(grid.size(), 0);
  std::vector<std::size_t> stack;
  auto seed = [&](Point p) {
    const std::size_t i = grid.index(p);
    if (!exterior[i] && !est.surface.is_object(p.x, p.y)) {
      exterior[i] = 1;
      stack.push_back(i);
    }
  };
  for (int x = est.region.x_min; x <= est.region.x_max; ++x) {
    seed({x, est.region.y_min});
    seed({x, est.region.y_max});
  }
  for (int y = est.region.y_min; y <= est.region.y_max; ++y) {
    seed({est.region.x_min, y});
    seed({est.region.x_max, y});
  }
  constexpr std::array<Point, 4> k4 = {Point{1, 0}, Point{0, 1}, Point{-1, 0}, Point{0, -1}};
  while (!stack.empty()) {
    const Point p = grid.point(stack.back());
    stack.pop_back();
    for (Point d : k4) {
      const Point q{p.x + d.x, p.y + d.y};
      if (est.region.contains(q)) seed(q);
    }
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!exterior[i]) {
      const Point p = grid.point(i);
      est.surface.at(p.x, p.y) = Label::Object;
    }
  }
  est.skeleton = skeletonize(est.surface);
  return est;
}

namespace {

// Neighborhood in Zhang-Suen naming: p[0]=P2 (N), p[1]=P3 (NE), ... p[7]=P9 (NW).
std::array<int, 8> neighbors(const std::vector<char>& img, int stride, std::size_t i) {
  const std::size_t s = static_cast<std::size_t>(stride);
  return {img[i - s], img[i - s + 1], img[i + 1], img[i + s + 1],
          img[i + s], img[i + s - 1], img[i - 1], img[i - s - 1]};
}

int transitions(const std::array<int, 8>& p) {
  int a = 0;
  for (std::size_t k = 0; k < 8; ++k) a += (p[k] == 0 && p[(k + 1) % 8] == 1) ? 1 : 0;
  return a;
}

int ones(const std::array<int, 8>& p) {
  int b = 0;
  for (int v : p) b += v;
  return b;
}

// Yokoi 8-connectivity number; 1 means deleting the pixel keeps topology.
int connectivity8(const std::array<int, 8>& p) {
  // Reorder to E, NE, N, NW, W, SW, S, SE and complement.
  const int x[9] = {1 - p[2], 1 - p[1], 1 - p[0], 1 - p[7], 1 - p[6],
                    1 - p[5], 1 - p[4], 1 - p[3], 1 - p[2]};
  int n = 0;
  for (int k = 0; k < 8; k += 2) n += x[k] - x[k] * x[k + 1] * x[k + 2];
  return n;
}

}  // namespace

BinaryMask skeletonize(const BinaryMask& mask) {
  const int w = mask.width();
  const int h = mask.height();
  BinaryMask out(w, h);
  if (mask.count(Label::Object) == 0) return out;

  const int stride = w + 2;
  std::vector<char> img(static_cast<std::size_t>(stride) * (h + 2), 0);
  auto idx = [&](int x, int y) { return static_cast<std::size_t>(y + 1) * stride + (x + 1); };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img[idx(x, y)] = mask.is_object(x, y) ? 1 : 0;

  std::vector<std::size_t> marked;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int pass = 0; pass < 2; ++pass) {
      marked.clear();
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const std::size_t i = idx(x, y);
          if (!img[i]) continue;
          const auto p = neighbors(img, stride, i);
          const int b = ones(p);
          if (b < 2 || b > 6 || transitions(p) != 1) continue;
          const bool ok = pass == 0 ? (p[0] * p[2] * p[4] == 0 && p[2] * p[4] * p[6] == 0)
                                    : (p[0] * p[2] * p[6] == 0 && p[0] * p[4] * p[6] == 0);
          if (ok) marked.push_back(i);
        }
      }
      for (std::size_t i : marked) {
        const auto p = neighbors(img, stride, i);
        if (ones(p) >= 2 && connectivity8(p) == 1) {
          img[i] = 0;
          changed = true;
        }
      }
    }
  }

  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (img[idx(x, y)]) out.at(x, y) = Label::Object;
  return out;
}

}  // namespace xclick
