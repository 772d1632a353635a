#include <fstream>
#include <random>

#include "json.hpp"

#include "doctest.h"
#include "support.hpp"
#include "xclick/error.hpp"
#include "xclick/geometry.hpp"

using namespace xclick;

namespace {

// Independent full-scan oracle for the tight box.
BoundingBox scan_box(const BinaryMask& m) {
  int x0 = m.width(), y0 = m.height(), x1 = -1, y1 = -1;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i] != Label::Object) continue;
    const int x = static_cast<int>(i % m.width());
    const int y = static_cast<int>(i / m.width());
    x0 = std::min(x0, x), x1 = std::max(x1, x);
    y0 = std::min(y0, y), y1 = std::max(y1, y);
  }
  return {x0, y0, x1, y1};
}

}  // namespace

TEST_CASE("infer_roles with unique extrema") {
  const std::vector<Point> pts = {{2, 5}, {4, 1}, {9, 6}, {5, 8}};
  const ExtremeClicks c = infer_roles(pts);
  CHECK(c.left() == Point{2, 5});
  CHECK(c.top() == Point{4, 1});
  CHECK(c.right() == Point{9, 6});
  CHECK(c.bottom() == Point{5, 8});

  const std::vector<Point> reversed(pts.rbegin(), pts.rend());
  const ExtremeClicks r = infer_roles(reversed);
  for (Role role : kAllRoles) CHECK(r.at(role) == c.at(role));
}

TEST_CASE("infer_roles full tie uses priority order") {
  const std::vector<Point> pts(4, Point{0, 0});
  const ExtremeClicks c = infer_roles(pts);
  CHECK(c.role_to_click == std::array<int, 4>{0, 1, 2, 3});
}

TEST_CASE("infer_roles prefers a consistent assignment over greedy") {
  // (0,0) ties for left with (0,5) but is the only top candidate.
  const std::vector<Point> pts = {{0, 0}, {0, 5}, {6, 3}, {3, 9}};
  const ExtremeClicks c = infer_roles(pts);
  CHECK(c.left() == Point{0, 5});
  CHECK(c.top() == Point{0, 0});
  CHECK(c.right() == Point{6, 3});
  CHECK(c.bottom() == Point{3, 9});
}

TEST_CASE("infer_roles arity") {
  const std::vector<Point> three = {{0, 0}, {1, 1}, {2, 2}};
  CHECK_THROWS_AS(infer_roles(three), Error);
  const std::vector<Point> five(5);
  try {
    infer_roles(five);
    FAIL("expected arity error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Arity);
  }
}

TEST_CASE("infer_roles is permutation invariant with unique extrema") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Point> pts = {{0, 10}, {10, 0}, {20, 10}, {10, 20}};
    std::uniform_int_distribution<int> jitter(-4, 4);
    for (auto& p : pts) p = {p.x + jitter(rng), p.y + jitter(rng)};
    const ExtremeClicks base = infer_roles(pts);
    std::shuffle(pts.begin(), pts.end(), rng);
    const ExtremeClicks other = infer_roles(pts);
    for (Role role : kAllRoles) CHECK(other.at(role) == base.at(role));
  }
}

TEST_CASE("box_from_clicks") {
  const std::vector<Point> pts = {{2, 5}, {4, 1}, {9, 6}, {5, 8}};
  CHECK(box_from_clicks(infer_roles(pts)) == BoundingBox{2, 1, 9, 8});
  const std::vector<Point> same(4, Point{5, 5});
  const BoundingBox b = box_from_clicks(infer_roles(same));
  CHECK(b == BoundingBox{5, 5, 5, 5});
  CHECK(b.area() == 1);
}

TEST_CASE("tight_box_from_mask") {
  CHECK(tight_box_from_mask(testing::rect_mask(10, 10, 2, 1, 5, 4)) == BoundingBox{2, 1, 5, 4});
  BinaryMask one(10, 10);
  one.at(7, 3) = Label::Object;
  CHECK(tight_box_from_mask(one) == BoundingBox{7, 3, 7, 3});
  CHECK_THROWS_AS(tight_box_from_mask(BinaryMask(4, 4)), Error);

  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    const BinaryMask m = testing::random_blob_mask(rng);
    CHECK(tight_box_from_mask(m) == scan_box(m));
  }
}

TEST_CASE("simulate_extreme_clicks") {
  const BinaryMask rect = testing::rect_mask(10, 10, 2, 1, 5, 4);
  const ExtremeClicks c = simulate_extreme_clicks(rect);
  // Tie run {2,3,4,5}: index floor(3/2) = 1.
  CHECK(c.top() == Point{3, 1});
  CHECK(c.bottom() == Point{3, 4});
  CHECK(c.left() == Point{2, 2});
  CHECK(c.right() == Point{5, 2});

  BinaryMask single(10, 10);
  single.at(5, 5) = Label::Object;
  const ExtremeClicks s = simulate_extreme_clicks(single);
  for (Role role : kAllRoles) CHECK(s.at(role) == Point{5, 5});

  CHECK_THROWS_AS(simulate_extreme_clicks(BinaryMask(3, 3)), Error);
}

TEST_CASE("simulated clicks lie on object pixels and on the tight box border") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 300; ++i) {
    const BinaryMask m = testing::random_blob_mask(rng);
    const ExtremeClicks c = simulate_extreme_clicks(m);
    const BoundingBox oracle = scan_box(m);
    for (const Point& p : c.points) CHECK(m.is_object(p.x, p.y));
    CHECK(c.left().x == oracle.x_min);
    CHECK(c.right().x == oracle.x_max);
    CHECK(c.top().y == oracle.y_min);
    CHECK(c.bottom().y == oracle.y_max);
    CHECK(box_from_clicks(c) == tight_box_from_mask(m));
  }
}

TEST_CASE("iou_boxes") {
  const BoundingBox a{0, 0, 9, 9};
  CHECK(iou_boxes(a, a) == 1.0);
  CHECK(iou_boxes(a, {20, 20, 25, 25}) == 0.0);
  CHECK(iou_boxes(a, {5, 0, 14, 9}) == doctest::Approx(50.0 / 150.0).epsilon(1e-12));
  CHECK(iou_boxes({5, 0, 14, 9}, a) == iou_boxes(a, {5, 0, 14, 9}));

  // Monotone as the boxes slide apart.
  double last = 1.0;
  for (int dx = 0; dx <= 12; ++dx) {
    const double v = iou_boxes(a, {dx, 0, 9 + dx, 9});
    CHECK(v <= last);
    last = v;
  }
}

TEST_CASE("iou_masks") {
  const BinaryMask a = testing::rect_mask(10, 10, 0, 0, 9, 4);
  CHECK(iou_masks(a, a) == 1.0);
  BinaryMask comp(10, 10);
  for (std::size_t i = 0; i < a.size(); ++i)
    comp[i] = a[i] == Label::Object ? Label::Background : Label::Object;
  CHECK(iou_masks(a, comp) == 0.0);

  // 50-pixel masks sharing 25 pixels: union 75.
  const BinaryMask p = testing::rect_mask(20, 10, 0, 0, 9, 4);
  const BinaryMask q = testing::rect_mask(20, 10, 5, 0, 14, 4);
  CHECK(iou_masks(p, q) == doctest::Approx(25.0 / 75.0).epsilon(1e-12));

  // Ignore pixels drop out of both counts.
  BinaryMask pi = p;
  for (int y = 0; y < 5; ++y) pi.at(14, y) = Label::Ignore;
  CHECK(iou_masks(pi, q) == doctest::Approx(25.0 / 70.0).epsilon(1e-12));
  CHECK(iou_masks(q, pi) == iou_masks(pi, q));

  CHECK_THROWS_AS(iou_masks(a, BinaryMask(3, 3)), Error);
}

TEST_CASE("perturb_box") {
  const BoundingBox b{10, 10, 20, 20};
  CHECK(perturb_box(b, 0, 123) == b);
  CHECK(perturb_box(b, 4, 42) == perturb_box(b, 4, 42));

  // Golden file written once from this implementation's mt19937_64 stream.
  std::ifstream in(std::string(XCLICK_FIXTURE_DIR) + "/perturb_golden.json");
  REQUIRE(in.good());
  const auto golden = nlohmann::json::parse(in);
  REQUIRE(golden.size() == 8);
  for (const auto& row : golden) {
    const auto& g = row["box"];
    const BoundingBox expected{g["x_min"], g["y_min"], g["x_max"], g["y_max"]};
    CHECK(perturb_box(b, 4, row["seed"].get<std::uint64_t>()) == expected);
  }

  // Each coordinate moved by exactly 4 before reordering.
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const BoundingBox p = perturb_box(b, 4, seed);
    CHECK(std::abs(p.x_min - b.x_min) == 4);
    CHECK(std::abs(p.y_max - b.y_max) == 4);
  }

  const BoundingBox corner{0, 0, 3, 3};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const BoundingBox p = perturb_box(corner, 10, seed, ImageBounds{8, 8});
    CHECK(p.valid());
    CHECK(p.x_min >= 0);
    CHECK(p.y_min >= 0);
    CHECK(p.x_max <= 7);
    CHECK(p.y_max <= 7);
  }
  CHECK_THROWS_AS(perturb_box(b, -1, 0), Error);
}
