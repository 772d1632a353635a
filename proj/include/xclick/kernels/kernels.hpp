#pragma once

// Data-parallel inner loops. Every kernel has a scalar reference
// implementation; wider variants must produce bit-identical results
// (the build disables FP contraction so operation order is preserved).

#include <cstddef>
#include <string_view>

namespace xclick::kernels {

enum class SimdLevel { Scalar, Avx2 };

std::string_view to_string(SimdLevel level) noexcept;

// Lower-triangular inverse Cholesky factor U (Sigma^-1 = U^T U), stored as
// u00, u10, u11, u20, u21, u22, plus the mean.
struct MahalanobisParams {
  double u00, u10, u11, u20, u21, u22;
  double mean[3];
};

struct KernelTable {
  // One row of the per-channel Scharr magnitude. `up`, `mid` and `down` are
  // rows padded with one replicated sample on each side (width + 2 values).
  // Writes max(out[i], gx^2 + gy^2) for i in [0, width).
  void (*scharr_row_max_sq)(const float* up, const float* mid, const float* down,
                            std::size_t width, float* out);

  // out[i] = |U (x_i - mean)|^2 over planar r/g/b samples.
  void (*mahalanobis_sq)(const double* r, const double* g, const double* b, std::size_t n,
                         const MahalanobisParams& params, double* out);
};

const KernelTable& scalar_kernels() noexcept;
#if defined(XCLICK_BUILD_AVX2)
const KernelTable& avx2_kernels() noexcept;
#endif

// Best level supported by both the build and the running CPU.
SimdLevel detected_level() noexcept;

// Kernels currently in use. Defaults to detected_level().
const KernelTable& active() noexcept;
SimdLevel active_level() noexcept;

// Restrict dispatch (e.g. to compare against the scalar path). Requests above
// detected_level() are clamped.
void set_level(SimdLevel level) noexcept;

}  // namespace xclick::kernels
