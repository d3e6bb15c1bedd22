#include <cstdlib>
#include <string>

#include "onebit/simd.hpp"

namespace onebit::simd {

Isa detect_isa() {
#if defined(__x86_64__) || defined(_M_X64)
  __builtin_cpu_init();
  if (avx2_kernels() != nullptr && __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
    return Isa::Avx2;
#endif
  return Isa::Scalar;
}

Isa active_isa() {
  static const Isa isa = [] {
    const char* forced = std::getenv("ONEBIT_SIMD");
    if (forced != nullptr && std::string(forced) == "scalar") return Isa::Scalar;
    return detect_isa();
  }();
  return isa;
}

std::string_view isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

const KernelTable& kernels() {
  static const KernelTable& table =
      active_isa() == Isa::Avx2 ? *avx2_kernels() : scalar_kernels();
  return table;
}

void gemv(const double* a, std::size_t rows, std::size_t cols, std::span<const double> x,
          std::span<double> y) {
  const auto& k = kernels();
  for (std::size_t i = 0; i < rows; ++i) y[i] = 0.0;
  for (std::size_t j = 0; j < cols; ++j) {
    if (x[j] != 0.0) k.axpy(x[j], a + j * rows, y.data(), rows);
  }
}

void gemv_t(const double* a, std::size_t rows, std::size_t cols, std::span<const double> x,
            std::span<double> y) {
  const auto& k = kernels();
  for (std::size_t j = 0; j < cols; ++j) y[j] = k.dot(a + j * rows, x.data(), rows);
}

}  // namespace onebit::simd
