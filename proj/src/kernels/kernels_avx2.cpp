#include <immintrin.h>

#include <algorithm>

#include "xclick/kernels/kernels.hpp"

namespace xclick::kernels {
namespace {

void scharr_row_max_sq(const float* up, const float* mid, const float* down, std::size_t width,
                       float* out) {
  const __m256 three = _mm256_set1_ps(3.0f);
  const __m256 ten = _mm256_set1_ps(10.0f);
  std::size_t i = 0;
  for (; i + 8 <= width; i += 8) {
    const __m256 u0 = _mm256_loadu_ps(up + i);
    const __m256 u1 = _mm256_loadu_ps(up + i + 1);
    const __m256 u2 = _mm256_loadu_ps(up + i + 2);
    const __m256 m0 = _mm256_loadu_ps(mid + i);
    const __m256 m2 = _mm256_loadu_ps(mid + i + 2);
    const __m256 d0 = _mm256_loadu_ps(down + i);
    const __m256 d1 = _mm256_loadu_ps(down + i + 1);
    const __m256 d2 = _mm256_loadu_ps(down + i + 2);

    __m256 gx = _mm256_mul_ps(three, _mm256_sub_ps(u2, u0));
    gx = _mm256_add_ps(gx, _mm256_mul_ps(ten, _mm256_sub_ps(m2, m0)));
    gx = _mm256_add_ps(gx, _mm256_mul_ps(three, _mm256_sub_ps(d2, d0)));
    __m256 gy = _mm256_mul_ps(three, _mm256_sub_ps(d0, u0));
    gy = _mm256_add_ps(gy, _mm256_mul_ps(ten, _mm256_sub_ps(d1, u1)));
    gy = _mm256_add_ps(gy, _mm256_mul_ps(three, _mm256_sub_ps(d2, u2)));

    const __m256 m = _mm256_add_ps(_mm256_mul_ps(gx, gx), _mm256_mul_ps(gy, gy));
    _mm256_storeu_ps(out + i, _mm256_max_ps(_mm256_loadu_ps(out + i), m));
  }
  for (; i < width; ++i) {
    const float gx = 3.0f * (up[i + 2] - up[i]) + 10.0f * (mid[i + 2] - mid[i]) +
                     3.0f * (down[i + 2] - down[i]);
    const float gy = 3.0f * (down[i] - up[i]) + 10.0f * (down[i + 1] - up[i + 1]) +
                     3.0f * (down[i + 2] - up[i + 2]);
    out[i] = std::max(out[i], gx * gx + gy * gy);
  }
}

void mahalanobis_sq(const double* r, const double* g, const double* b, std::size_t n,
                    const MahalanobisParams& p, double* out) {
  const __m256d mr = _mm256_set1_pd(p.mean[0]);
  const __m256d mg = _mm256_set1_pd(p.mean[1]);
  const __m256d mb = _mm256_set1_pd(p.mean[2]);
  const __m256d u00 = _mm256_set1_pd(p.u00);
  const __m256d u10 = _mm256_set1_pd(p.u10);
  const __m256d u11 = _mm256_set1_pd(p.u11);
  const __m256d u20 = _mm256_set1_pd(p.u20);
  const __m256d u21 = _mm256_set1_pd(p.u21);
  const __m256d u22 = _mm256_set1_pd(p.u22);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(r + i), mr);
    const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(g + i), mg);
    const __m256d d2 = _mm256_sub_pd(_mm256_loadu_pd(b + i), mb);
    const __m256d y0 = _mm256_mul_pd(u00, d0);
    const __m256d y1 = _mm256_add_pd(_mm256_mul_pd(u10, d0), _mm256_mul_pd(u11, d1));
    const __m256d y2 = _mm256_add_pd(
        _mm256_add_pd(_mm256_mul_pd(u20, d0), _mm256_mul_pd(u21, d1)), _mm256_mul_pd(u22, d2));
    const __m256d s = _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(y0, y0), _mm256_mul_pd(y1, y1)),
                                    _mm256_mul_pd(y2, y2));
    _mm256_storeu_pd(out + i, s);
  }
  for (; i < n; ++i) {
    const double d0 = r[i] - p.mean[0];
    const double d1 = g[i] - p.mean[1];
    const double d2 = b[i] - p.mean[2];
    const double y0 = p.u00 * d0;
    const double y1 = p.u10 * d0 + p.u11 * d1;
    const double y2 = p.u20 * d0 + p.u21 * d1 + p.u22 * d2;
    out[i] = y0 * y0 + y1 * y1 + y2 * y2;
  }
}

constexpr KernelTable kAvx2{scharr_row_max_sq, mahalanobis_sq};

}  // namespace

const KernelTable& avx2_kernels() noexcept { return kAvx2; }

}  // namespace xclick::kernels
