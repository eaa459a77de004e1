#include <cstdlib>
#include <string_view>

#include "geocloak/simd/kernels.hpp"

namespace geocloak::simd {

#if defined(GEOCLOAK_HAVE_AVX2)
const KernelTable& avx2_kernels_unchecked();

const KernelTable* avx2_kernels() {
  static const bool supported = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma") &&
           __builtin_cpu_supports("popcnt");
  }();
  return supported ? &avx2_kernels_unchecked() : nullptr;
}
#else
const KernelTable* avx2_kernels() { return nullptr; }
#endif

const KernelTable& active_kernels() {
  static const KernelTable& table = []() -> const KernelTable& {
    const char* forced = std::getenv("GEOCLOAK_SIMD");
    if (forced != nullptr && std::string_view(forced) == "scalar") return scalar_kernels();
    if (const KernelTable* avx2 = avx2_kernels()) return *avx2;
    return scalar_kernels();
  }();
  return table;
}

}  // namespace geocloak::simd
