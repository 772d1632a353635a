#include "xclick/kernels/kernels.hpp"

#include <algorithm>

namespace xclick::kernels {
namespace {

void scharr_row_max_sq(const float* up, const float* mid, const float* down, std::size_t width,
                       float* out) {
  for (std::size_t i = 0; i < width; ++i) {
    // Padded index i+1 is the center pixel.
    const float gx = 3.0f * (up[i + 2] - up[i]) + 10.0f * (mid[i + 2] - mid[i]) +
                     3.0f * (down[i + 2] - down[i]);
    const float gy = 3.0f * (down[i] - up[i]) + 10.0f * (down[i + 1] - up[i + 1]) +
                     3.0f * (down[i + 2] - up[i + 2]);
    const float m = gx * gx + gy * gy;
    out[i] = std::max(out[i], m);
  }
}

void mahalanobis_sq(const double* r, const double* g, const double* b, std::size_t n,
                    const MahalanobisParams& p, double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double d0 = r[i] - p.mean[0];
    const double d1 = g[i] - p.mean[1];
    const double d2 = b[i] - p.mean[2];
    const double y0 = p.u00 * d0;
    const double y1 = p.u10 * d0 + p.u11 * d1;
    const double y2 = p.u20 * d0 + p.u21 * d1 + p.u22 * d2;
    out[i] = y0 * y0 + y1 * y1 + y2 * y2;
  }
}

constexpr KernelTable kScalar{scharr_row_max_sq, mahalanobis_sq};

}  // namespace

const KernelTable& scalar_kernels() noexcept { return kScalar; }

}  // namespace xclick::kernels
