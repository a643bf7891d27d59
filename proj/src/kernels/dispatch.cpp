#include <cstdlib>
#include <string_view>

#include "steer/kernels/stencil.hpp"

namespace steer::kernels {

#ifndef STEER_BUILD_AVX2
const StencilKernels* avx2_kernels() { return nullptr; }
#endif

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const StencilKernels& active_kernels() {
  static const StencilKernels& chosen = [&]() -> const StencilKernels& {
    const char* force = std::getenv("STEER_KERNELS");
    if (force && std::string_view(force) == "scalar") return scalar_kernels();
    if (const auto* k = avx2_kernels(); k && cpu_has_avx2()) return *k;
    return scalar_kernels();
  }();
  return chosen;
}

}  // namespace steer::kernels
