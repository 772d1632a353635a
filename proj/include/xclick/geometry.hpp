#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace xclick {

// Raster convention: x is the column (grows right), y is the row (grows down).
struct Point {
  int x = 0;
  int y = 0;

  friend bool operator==(const Point&, const Point&) = default;
};

// Inclusive integer pixel bounds.
struct BoundingBox {
  int x_min = 0;
  int y_min = 0;
  int x_max = 0;
  int y_max = 0;

  int width() const noexcept { return x_max - x_min + 1; }
  int height() const noexcept { return y_max - y_min + 1; }
  std::int64_t area() const noexcept {
    return static_cast<std::int64_t>(width()) * height();
  }
  bool contains(Point p) const noexcept {
    return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max;
  }
  bool valid() const noexcept { return x_min <= x_max && y_min <= y_max; }

  // Grow by `margin` on every side, then clip to [0,width) x [0,height).
  BoundingBox dilated(int margin, int image_width, int image_height) const noexcept;

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

enum class Role : std::uint8_t { Left = 0, Top = 1, Right = 2, Bottom = 3 };

inline constexpr std::array<Role, 4> kAllRoles = {Role::Left, Role::Top, Role::Right,
                                                  Role::Bottom};

std::string_view to_string(Role role) noexcept;
Role role_from_string(std::string_view name);

// Four annotator points in click order plus the role each one plays.
struct ExtremeClicks {
  std::array<Point, 4> points{};
  // role_to_click[role] is the index into `points` of the click with that role.
  std::array<int, 4> role_to_click{0, 1, 2, 3};
  std::array<std::optional<std::int64_t>, 4> timestamps_ms{};

  Point at(Role role) const noexcept {
    return points[static_cast<std::size_t>(role_to_click[static_cast<std::size_t>(role)])];
  }
  Point left() const noexcept { return at(Role::Left); }
  Point top() const noexcept { return at(Role::Top); }
  Point right() const noexcept { return at(Role::Right); }
  Point bottom() const noexcept { return at(Role::Bottom); }

  friend bool operator==(const ExtremeClicks&, const ExtremeClicks&) = default;
};

enum class Label : std::uint8_t { Background = 0, Object = 1, Ignore = 2 };

class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height, Label fill = Label::Background);
  BinaryMask(int width, int height, std::vector<Label> labels);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return labels_.size(); }
  bool empty() const noexcept { return labels_.empty(); }

  Label at(int x, int y) const noexcept {
    return labels_[static_cast<std::size_t>(y) * width_ + x];
  }
  Label& at(int x, int y) noexcept { return labels_[static_cast<std::size_t>(y) * width_ + x]; }
  Label operator[](std::size_t i) const noexcept { return labels_[i]; }
  Label& operator[](std::size_t i) noexcept { return labels_[i]; }

  bool is_object(int x, int y) const noexcept { return at(x, y) == Label::Object; }
  bool in_bounds(Point p) const noexcept {
    return p.x >= 0 && p.y >= 0 && p.x < width_ && p.y < height_;
  }

  std::size_t count(Label label) const noexcept;
  std::span<const Label> labels() const noexcept { return labels_; }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<Label> labels_;
};

// Throws Error(Arity) unless exactly four points are given.
ExtremeClicks infer_roles(std::span<const Point> points,
                          std::span<const std::optional<std::int64_t>> timestamps_ms = {});

BoundingBox box_from_clicks(const ExtremeClicks& clicks) noexcept;
BoundingBox tight_box_from_mask(const BinaryMask& mask);
ExtremeClicks simulate_extreme_clicks(const BinaryMask& mask);

double iou_boxes(const BoundingBox& a, const BoundingBox& b) noexcept;
double iou_masks(const BinaryMask& a, const BinaryMask& b);

struct ImageBounds {
  int width = 0;
  int height = 0;
};

// Shifts each coordinate by -delta or +delta (one fair coin per coordinate,
// drawn from a seeded mt19937_64), then reorders and clips.
BoundingBox perturb_box(const BoundingBox& box, int delta, std::uint64_t seed,
                        std::optional<ImageBounds> bounds = std::nullopt);

BinaryMask box_mask(const BoundingBox& box, int width, int height);

}  // namespace xclick
