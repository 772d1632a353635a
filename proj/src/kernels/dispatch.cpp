#include <algorithm>
#include <atomic>

#include "xclick/kernels/kernels.hpp"

namespace xclick::kernels {
namespace {

SimdLevel probe() noexcept {
#if defined(XCLICK_BUILD_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2")) return SimdLevel::Avx2;
#endif
  return SimdLevel::Scalar;
}

std::atomic<SimdLevel>& selected() noexcept {
  static std::atomic<SimdLevel> level{probe()};
  return level;
}

}  // namespace

std::string_view to_string(SimdLevel level) noexcept {
  return level == SimdLevel::Avx2 ? "avx2" : "scalar";
}

SimdLevel detected_level() noexcept {
  static const SimdLevel level = probe();
  return level;
}

SimdLevel active_level() noexcept { return selected().load(std::memory_order_relaxed); }

const KernelTable& active() noexcept {
#if defined(XCLICK_BUILD_AVX2)
  if (active_level() == SimdLevel::Avx2) return avx2_kernels();
#endif
  return scalar_kernels();
}

void set_level(SimdLevel level) noexcept {
  const SimdLevel capped =
      static_cast<int>(level) > static_cast<int>(detected_level()) ? detected_level() : level;
  selected().store(capped, std::memory_order_relaxed);
}

}  // namespace xclick::kernels
