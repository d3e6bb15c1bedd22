#include "onebit/simd.hpp"

namespace onebit::simd {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum_squares_scalar(const double* a, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * a[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

std::size_t count_sign_agree_scalar(const double* y, const std::uint8_t* t, std::size_t n) {
  std::size_t agree = 0;
  for (std::size_t i = 0; i < n; ++i) agree += ((y[i] >= 0.0) == (t[i] != 0)) ? 1 : 0;
  return agree;
}

void sign_residual_scalar(const double* y, const std::uint8_t* t, double* r, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double s = t[i] ? 1.0 : -1.0;
    r[i] = s - (y[i] >= 0.0 ? 1.0 : -1.0);
  }
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{dot_scalar, sum_squares_scalar, axpy_scalar,
                                 count_sign_agree_scalar, sign_residual_scalar};
  return table;
}

}  // namespace onebit::simd
