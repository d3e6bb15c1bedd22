#pragma once

// Data-parallel inner loops used by the measurement model and BIHT.
//
// Every kernel has a scalar reference implementation and, on x86-64, an
// AVX2+FMA variant. The variant is picked once per process from CPUID; set
// ONEBIT_SIMD=scalar in the environment to force the reference path.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace onebit::simd {

enum class Isa { Scalar, Avx2 };

struct KernelTable {
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum_squares)(const double* a, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // number of i with (y[i] >= 0) == (t[i] != 0)
  std::size_t (*count_sign_agree)(const double* y, const std::uint8_t* t, std::size_t n);
  // r[i] = (2 t[i] - 1) - sign(y[i]), sign(0) = +1
  void (*sign_residual)(const double* y, const std::uint8_t* t, double* r, std::size_t n);
};

const KernelTable& scalar_kernels();
// Null when the build target has no AVX2 variant.
const KernelTable* avx2_kernels();

Isa detect_isa();
Isa active_isa();
std::string_view isa_name(Isa isa);
const KernelTable& kernels();

inline double dot(std::span<const double> a, std::span<const double> b) {
  return kernels().dot(a.data(), b.data(), a.size());
}

inline double sum_squares(std::span<const double> a) {
  return kernels().sum_squares(a.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  kernels().axpy(alpha, x.data(), y.data(), x.size());
}

inline std::size_t count_sign_agree(std::span<const double> y, std::span<const std::uint8_t> t) {
  return kernels().count_sign_agree(y.data(), t.data(), y.size());
}

inline void sign_residual(std::span<const double> y, std::span<const std::uint8_t> t,
                          std::span<double> r) {
  kernels().sign_residual(y.data(), t.data(), r.data(), y.size());
}

// Column-major n x m matrix (Eigen's default layout) times a vector.
void gemv(const double* a, std::size_t rows, std::size_t cols, std::span<const double> x,
          std::span<double> y);
// Transposed product: y = A^T x, one dot per column.
void gemv_t(const double* a, std::size_t rows, std::size_t cols, std::span<const double> x,
            std::span<double> y);

}  // namespace onebit::simd
