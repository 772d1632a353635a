#include "xclick/geometry.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <string>

#include "xclick/error.hpp"

namespace xclick {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Arity: return "ARITY";
    case ErrorCode::EmptyMask: return "EMPTY_MASK";
    case ErrorCode::DimensionMismatch: return "DIMENSION_MISMATCH";
    case ErrorCode::OutOfBounds: return "OUT_OF_BOUNDS";
    case ErrorCode::Parse: return "PARSE";
    case ErrorCode::Io: return "IO";
    case ErrorCode::Submodularity: return "SUBMODULARITY";
    case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::InsufficientPool: return "INSUFFICIENT_POOL";
    case ErrorCode::State: return "STATE";
    case ErrorCode::Internal: return "INTERNAL";
  }
  return "UNKNOWN";
}

BoundingBox BoundingBox::dilated(int margin, int image_width, int image_height) const noexcept {
  return {std::max(0, x_min - margin), std::max(0, y_min - margin),
          std::min(image_width - 1, x_max + margin), std::min(image_height - 1, y_max + margin)};
}

std::string_view to_string(Role role) noexcept {
  switch (role) {
    case Role::Left: return "left";
    case Role::Top: return "top";
    case Role::Right: return "right";
    case Role::Bottom: return "bottom";
  }
  return "left";
}

Role role_from_string(std::string_view name) {
  for (Role r : kAllRoles) {
    if (to_string(r) == name) return r;
  }
  throw Error(ErrorCode::Parse, "unknown role '" + std::string(name) + "'");
}

BinaryMask::BinaryMask(int width, int height, Label fill)
    : width_(width), height_(height) {
  if (width < 0 || height < 0) {
    throw Error(ErrorCode::InvalidArgument, "negative mask dimensions");
  }
  labels_.assign(static_cast<std::size_t>(width) * height, fill);
}

BinaryMask::BinaryMask(int width, int height, std::vector<Label> labels)
    : width_(width), height_(height), labels_(std::move(labels)) {
  if (width < 0 || height < 0 ||
      labels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw Error(ErrorCode::DimensionMismatch, "mask label count does not match width*height");
  }
}

std::size_t BinaryMask::count(Label label) const noexcept {
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), label));
}

namespace {

// Does `p` attain the extreme coordinate of `role` over `all`?
bool is_extreme(Role role, Point p, std::span<const Point> all) {
  switch (role) {
    case Role::Left:
      return std::all_of(all.begin(), all.end(), [&](Point q) { return p.x <= q.x; });
    case Role::Top:
      return std::all_of(all.begin(), all.end(), [&](Point q) { return p.y <= q.y; });
    case Role::Right:
      return std::all_of(all.begin(), all.end(), [&](Point q) { return p.x >= q.x; });
    case Role::Bottom:
      return std::all_of(all.begin(), all.end(), [&](Point q) { return p.y >= q.y; });
  }
  return false;
}

int role_key(Role role, Point p) {
  switch (role) {
    case Role::Left: return p.x;
    case Role::Top: return p.y;
    case Role::Right: return -p.x;
    case Role::Bottom: return -p.y;
  }
  return 0;
}

}  // namespace

ExtremeClicks infer_roles(std::span<const Point> points,
                          std::span<const std::optional<std::int64_t>> timestamps_ms) {
  if (points.size() != 4) {
    throw Error(ErrorCode::Arity,
                "extreme clicking needs exactly 4 points, got " + std::to_string(points.size()));
  }
  if (!timestamps_ms.empty() && timestamps_ms.size() != 4) {
    throw Error(ErrorCode::Arity, "timestamps must be absent or given for all 4 clicks");
  }

  ExtremeClicks clicks;
  std::copy(points.begin(), points.end(), clicks.points.begin());
  if (!timestamps_ms.empty()) {
    std::copy(timestamps_ms.begin(), timestamps_ms.end(), clicks.timestamps_ms.begin());
  }

  // Lexicographic order over (left, top, right, bottom) click indices: the
  // first bijection in which every role holds its extreme wins. This is the
  // left > top > right > bottom priority with click-order tie breaking.
  std::array<int, 4> perm{0, 1, 2, 3};
  do {
    bool ok = true;
    for (std::size_t r = 0; r < 4 && ok; ++r) {
      ok = is_extreme(kAllRoles[r], points[static_cast<std::size_t>(perm[r])], points);
    }
    if (ok) {
      clicks.role_to_click = perm;
      return clicks;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  // No bijection puts every role on its extreme (one click is extreme for two
  // roles and nothing ties it). Assign greedily over the remaining clicks.
  std::array<bool, 4> used{};
  for (std::size_t r = 0; r < 4; ++r) {
    int best = -1;
    for (int i = 0; i < 4; ++i) {
      if (used[static_cast<std::size_t>(i)]) continue;
      if (best < 0 || role_key(kAllRoles[r], points[static_cast<std::size_t>(i)]) <
                          role_key(kAllRoles[r], points[static_cast<std::size_t>(best)])) {
        best = i;
      }
    }
    used[static_cast<std::size_t>(best)] = true;
    clicks.role_to_click[r] = best;
  }
  return clicks;
}

BoundingBox box_from_clicks(const ExtremeClicks& clicks) noexcept {
  // Equal to (left.x, top.y, right.x, bottom.y) whenever roles are consistent;
  // the min/max form also covers the greedy fallback.
  BoundingBox box{clicks.points[0].x, clicks.points[0].y, clicks.points[0].x,
                  clicks.points[0].y};
  for (const Point& p : clicks.points) {
    box.x_min = std::min(box.x_min, p.x);
    box.y_min = std::min(box.y_min, p.y);
    box.x_max = std::max(box.x_max, p.x);
    box.y_max = std::max(box.y_max, p.y);
  }
  return box;
}

BoundingBox tight_box_from_mask(const BinaryMask& mask) {
  BoundingBox box{std::numeric_limits<int>::max(), std::numeric_limits<int>::max(), -1, -1};
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.is_object(x, y)) continue;
      box.x_min = std::min(box.x_min, x);
      box.y_min = std::min(box.y_min, y);
      box.x_max = std::max(box.x_max, x);
      box.y_max = std::max(box.y_max, y);
    }
  }
  if (box.x_max < 0) throw Error(ErrorCode::EmptyMask, "mask has no object pixels");
  return box;
}

ExtremeClicks simulate_extreme_clicks(const BinaryMask& mask) {
  const BoundingBox box = tight_box_from_mask(mask);

  auto middle = [](const std::vector<int>& run) {
    return run[(run.size() - 1) / 2];
  };
  std::vector<int> run;

  // Tie sets are scanned along the box side: rows by x, columns by y.
  auto column_run = [&](int x) {
    run.clear();
    for (int y = box.y_min; y <= box.y_max; ++y)
      if (mask.is_object(x, y)) run.push_back(y);
    return Point{x, middle(run)};
  };
  auto row_run = [&](int y) {
    run.clear();
    for (int x = box.x_min; x <= box.x_max; ++x)
      if (mask.is_object(x, y)) run.push_back(x);
    return Point{middle(run), y};
  };

  ExtremeClicks clicks;
  clicks.points = {column_run(box.x_min), row_run(box.y_min), column_run(box.x_max),
                   row_run(box.y_max)};
  clicks.role_to_click = {0, 1, 2, 3};
  return clicks;
}

double iou_boxes(const BoundingBox& a, const BoundingBox& b) noexcept {
  const int ix0 = std::max(a.x_min, b.x_min);
  const int iy0 = std::max(a.y_min, b.y_min);
  const int ix1 = std::min(a.x_max, b.x_max);
  const int iy1 = std::min(a.y_max, b.y_max);
  std::int64_t inter = 0;
  if (ix0 <= ix1 && iy0 <= iy1) {
    inter = static_cast<std::int64_t>(ix1 - ix0 + 1) * (iy1 - iy0 + 1);
  }
  const std::int64_t uni = a.area() + b.area() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double iou_masks(const BinaryMask& a, const BinaryMask& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw Error(ErrorCode::DimensionMismatch, "iou_masks: masks differ in size");
  }
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == Label::Ignore || b[i] == Label::Ignore) continue;
    const bool oa = a[i] == Label::Object;
    const bool ob = b[i] == Label::Object;
    inter += (oa && ob) ? 1 : 0;
    uni += (oa || ob) ? 1 : 0;
  }
  // Two empty masks agree perfectly.
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

BoundingBox perturb_box(const BoundingBox& box, int delta, std::uint64_t seed,
                        std::optional<ImageBounds> bounds) {
  if (delta < 0) throw Error(ErrorCode::InvalidArgument, "perturb_box: delta must be >= 0");
  // Raw engine bits keep the output identical across standard libraries.
  std::mt19937_64 rng(seed);
  auto shift = [&](int v) { return (rng() & 1u) ? v + delta : v - delta; };
  int x0 = shift(box.x_min);
  int y0 = shift(box.y_min);
  int x1 = shift(box.x_max);
  int y1 = shift(box.y_max);
  if (x0 > x1) std::swap(x0, x1);
  if (y0 > y1) std::swap(y0, y1);
  if (bounds) {
    auto clip = [](int v, int hi) { return std::clamp(v, 0, hi); };
    x0 = clip(x0, bounds->width - 1);
    x1 = clip(x1, bounds->width - 1);
    y0 = clip(y0, bounds->height - 1);
    y1 = clip(y1, bounds->height - 1);
  }
  return {x0, y0, x1, y1};
}

BinaryMask box_mask(const BoundingBox& box, int width, int height) {
  BinaryMask mask(width, height);
  for (int y = std::max(0, box.y_min); y <= std::min(height - 1, box.y_max); ++y)
    for (int x = std::max(0, box.x_min); x <= std::min(width - 1, box.x_max); ++x)
      mask.at(x, y) = Label::Object;
  return mask;
}

}  // namespace xclick
