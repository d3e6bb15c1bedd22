#include <cstring>

#include "onebit/simd.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>
#define ONEBIT_HAVE_AVX2_VARIANT 1
#endif

namespace onebit::simd {

#if ONEBIT_HAVE_AVX2_VARIANT
namespace {

#define ONEBIT_AVX2 __attribute__((target("avx2,fma")))

ONEBIT_AVX2 inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

ONEBIT_AVX2 double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

ONEBIT_AVX2 double sum_squares_avx2(const double* a, std::size_t n) {
  return dot_avx2(a, a, n);
}

ONEBIT_AVX2 void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vy = _mm256_loadu_pd(y + i);
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

// Loads four sign bits as a 0/1 double lane mask.
ONEBIT_AVX2 inline __m256d load_bits(const std::uint8_t* t) {
  int packed;
  std::memcpy(&packed, t, sizeof packed);
  const __m128i bytes = _mm_cvtsi32_si128(packed);
  const __m128i ints = _mm_cvtepu8_epi32(bytes);
  return _mm256_cvtepi32_pd(ints);
}

ONEBIT_AVX2 std::size_t count_sign_agree_avx2(const double* y, const std::uint8_t* t,
                                              std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t agree = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const int pos = _mm256_movemask_pd(_mm256_cmp_pd(_mm256_loadu_pd(y + i), zero, _CMP_GE_OQ));
    const int bit = _mm256_movemask_pd(_mm256_cmp_pd(load_bits(t + i), zero, _CMP_NEQ_OQ));
    agree += static_cast<std::size_t>(__builtin_popcount(~(pos ^ bit) & 0xF));
  }
  for (; i < n; ++i) agree += ((y[i] >= 0.0) == (t[i] != 0)) ? 1 : 0;
  return agree;
}

ONEBIT_AVX2 void sign_residual_avx2(const double* y, const std::uint8_t* t, double* r,
                                    std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d two = _mm256_set1_pd(2.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    // (2t - 1) - (2[y >= 0] - 1) = 2 (t - [y >= 0])
    const __m256d ge = _mm256_and_pd(_mm256_cmp_pd(_mm256_loadu_pd(y + i), zero, _CMP_GE_OQ),
                                     _mm256_set1_pd(1.0));
    _mm256_storeu_pd(r + i, _mm256_mul_pd(two, _mm256_sub_pd(load_bits(t + i), ge)));
  }
  for (; i < n; ++i) {
    const double s = t[i] ? 1.0 : -1.0;
    r[i] = s - (y[i] >= 0.0 ? 1.0 : -1.0);
  }
}

}  // namespace

const KernelTable* avx2_kernels() {
  static const KernelTable table{dot_avx2, sum_squares_avx2, axpy_avx2, count_sign_agree_avx2,
                                 sign_residual_avx2};
  return &table;
}

#else

const KernelTable* avx2_kernels() { return nullptr; }

#endif

}  // namespace onebit::simd
