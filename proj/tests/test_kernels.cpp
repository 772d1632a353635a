#include <cstring>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "xclick/kernels/kernels.hpp"

using namespace xclick::kernels;

namespace {

std::vector<float> random_row(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::vector<float> v(n);
  for (float& x : v) x = u(rng);
  return v;
}

MahalanobisParams random_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::Matrix3d a;
  for (int i = 0; i < 9; ++i) a(i / 3, i % 3) = u(rng);
  const Eigen::Matrix3d cov = a * a.transpose() + 0.01 * Eigen::Matrix3d::Identity();
  const Eigen::Matrix3d l = cov.llt().matrixL();
  const Eigen::Matrix3d inv = l.inverse();
  return {inv(0, 0), inv(1, 0), inv(1, 1), inv(2, 0), inv(2, 1), inv(2, 2),
          {u(rng), u(rng), u(rng)}};
}

}  // namespace

TEST_CASE("scalar scharr kernel matches the textbook stencil") {
  std::mt19937_64 rng(1);
  const std::size_t w = 9;
  const auto up = random_row(rng, w + 2), mid = random_row(rng, w + 2), down = random_row(rng, w + 2);
  std::vector<float> out(w, 0.0f);
  scalar_kernels().scharr_row_max_sq(up.data(), mid.data(), down.data(), w, out.data());
  const double kx[3][3] = {{-3, 0, 3}, {-10, 0, 10}, {-3, 0, 3}};
  const float* rows[3] = {up.data(), mid.data(), down.data()};
  for (std::size_t i = 0; i < w; ++i) {
    double gx = 0, gy = 0;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) {
        gx += kx[r][c] * rows[r][i + c];
        gy += kx[c][r] * rows[r][i + c];
      }
    CHECK(out[i] == doctest::Approx(gx * gx + gy * gy).epsilon(1e-5));
  }
}

TEST_CASE("scharr kernel keeps the running maximum") {
  const std::vector<float> flat(6, 0.5f);
  std::vector<float> out = {7.0f, 0.0f, 3.0f, 0.0f};
  scalar_kernels().scharr_row_max_sq(flat.data(), flat.data(), flat.data(), 4, out.data());
  CHECK(out == std::vector<float>{7.0f, 0.0f, 3.0f, 0.0f});
}

TEST_CASE("scalar mahalanobis kernel matches a dense solve") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const MahalanobisParams p = random_params(rng);
    Eigen::Matrix3d u = Eigen::Matrix3d::Zero();
    u << p.u00, 0, 0, p.u10, p.u11, 0, p.u20, p.u21, p.u22;
    const Eigen::Matrix3d precision = u.transpose() * u;
    const double r = 0.3, g = 0.9, b = 0.1;
    double out = 0;
    scalar_kernels().mahalanobis_sq(&r, &g, &b, 1, p, &out);
    const Eigen::Vector3d d(r - p.mean[0], g - p.mean[1], b - p.mean[2]);
    CHECK(out == doctest::Approx(d.dot(precision * d)).epsilon(1e-9));
  }
}

#if defined(XCLICK_BUILD_AVX2)
TEST_CASE("avx2 kernels are bit-identical to scalar") {
  if (detected_level() != SimdLevel::Avx2) {
    MESSAGE("CPU lacks AVX2, skipping");
    return;
  }
  std::mt19937_64 rng(3);
  for (std::size_t w : {1u, 2u, 7u, 8u, 9u, 15u, 16u, 17u, 63u, 100u, 257u}) {
    const auto up = random_row(rng, w + 2), mid = random_row(rng, w + 2), down = random_row(rng, w + 2);
    auto base = random_row(rng, w);
    for (float& v : base) v *= 40.0f;
    std::vector<float> a = base, b = base;
    scalar_kernels().scharr_row_max_sq(up.data(), mid.data(), down.data(), w, a.data());
    avx2_kernels().scharr_row_max_sq(up.data(), mid.data(), down.data(), w, b.data());
    CHECK(std::memcmp(a.data(), b.data(), w * sizeof(float)) == 0);

    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> r(w), g(w), bl(w);
    for (std::size_t i = 0; i < w; ++i) {
      r[i] = u(rng);
      g[i] = u(rng);
      bl[i] = u(rng);
    }
    const MahalanobisParams p = random_params(rng);
    std::vector<double> s(w), v(w);
    scalar_kernels().mahalanobis_sq(r.data(), g.data(), bl.data(), w, p, s.data());
    avx2_kernels().mahalanobis_sq(r.data(), g.data(), bl.data(), w, p, v.data());
    CHECK(std::memcmp(s.data(), v.data(), w * sizeof(double)) == 0);
  }
}
#endif

TEST_CASE("dispatch level can be lowered and restored") {
  const SimdLevel detected = detected_level();
  set_level(SimdLevel::Scalar);
  CHECK(active_level() == SimdLevel::Scalar);
  CHECK(&active() == &scalar_kernels());
  set_level(SimdLevel::Avx2);
  CHECK(active_level() == detected);
  set_level(detected);
  CHECK(to_string(SimdLevel::Scalar) == "scalar");
}
