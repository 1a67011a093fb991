// Compiled with -mavx2 only (no -mfma): every product is rounded before it
// is added, exactly like the scalar reference.

#include <immintrin.h>

#include "kernels_impl.hpp"

namespace ortho::simd::detail {

namespace {

// One output row, columns [j, n), continuing from the vector blocks.
inline void gemm_row_tail(std::size_t k, std::size_t n, std::size_t j0, const double* arow,
                          const double* b, double* crow) {
  std::size_t j = j0;
  for (; j + 4 <= n; j += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t p = 0; p < k; ++p) {
      const __m256d bv = _mm256_loadu_pd(b + p * n + j);
      acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_set1_pd(arow[p]), bv));
    }
    _mm256_storeu_pd(crow + j, acc);
  }
  for (; j < n; ++j) {
    double acc = 0.0;
    for (std::size_t p = 0; p < k; ++p) acc = acc + arow[p] * b[p * n + j];
    crow[j] = acc;
  }
}

}  // namespace

void gemm_avx2(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b,
               double* c) {
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    const double* a0 = a + (i + 0) * k;
    const double* a1 = a + (i + 1) * k;
    const double* a2 = a + (i + 2) * k;
    const double* a3 = a + (i + 3) * k;
    std::size_t j = 0;
    for (; j + 8 <= n; j += 8) {
      __m256d c00 = _mm256_setzero_pd(), c01 = _mm256_setzero_pd();
      __m256d c10 = _mm256_setzero_pd(), c11 = _mm256_setzero_pd();
      __m256d c20 = _mm256_setzero_pd(), c21 = _mm256_setzero_pd();
      __m256d c30 = _mm256_setzero_pd(), c31 = _mm256_setzero_pd();
      for (std::size_t p = 0; p < k; ++p) {
        const double* brow = b + p * n + j;
        const __m256d b0 = _mm256_loadu_pd(brow);
        const __m256d b1 = _mm256_loadu_pd(brow + 4);
        __m256d av = _mm256_set1_pd(a0[p]);
        c00 = _mm256_add_pd(c00, _mm256_mul_pd(av, b0));
        c01 = _mm256_add_pd(c01, _mm256_mul_pd(av, b1));
        av = _mm256_set1_pd(a1[p]);
        c10 = _mm256_add_pd(c10, _mm256_mul_pd(av, b0));
        c11 = _mm256_add_pd(c11, _mm256_mul_pd(av, b1));
        av = _mm256_set1_pd(a2[p]);
        c20 = _mm256_add_pd(c20, _mm256_mul_pd(av, b0));
        c21 = _mm256_add_pd(c21, _mm256_mul_pd(av, b1));
        av = _mm256_set1_pd(a3[p]);
        c30 = _mm256_add_pd(c30, _mm256_mul_pd(av, b0));
        c31 = _mm256_add_pd(c31, _mm256_mul_pd(av, b1));
      }
      _mm256_storeu_pd(c + (i + 0) * n + j, c00);
      _mm256_storeu_pd(c + (i + 0) * n + j + 4, c01);
      _mm256_storeu_pd(c + (i + 1) * n + j, c10);
      _mm256_storeu_pd(c + (i + 1) * n + j + 4, c11);
      _mm256_storeu_pd(c + (i + 2) * n + j, c20);
      _mm256_storeu_pd(c + (i + 2) * n + j + 4, c21);
      _mm256_storeu_pd(c + (i + 3) * n + j, c30);
      _mm256_storeu_pd(c + (i + 3) * n + j + 4, c31);
    }
    for (std::size_t r = 0; r < 4; ++r) gemm_row_tail(k, n, j, a + (i + r) * k, b, c + (i + r) * n);
  }
  for (; i < m; ++i) gemm_row_tail(k, n, 0, a + i * k, b, c + i * n);
}

void axpy_avx2(std::size_t n, double alpha, const double* x, double* y) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d yv = _mm256_loadu_pd(y + i);
    _mm256_storeu_pd(y + i, _mm256_add_pd(yv, _mm256_mul_pd(av, _mm256_loadu_pd(x + i))));
  }
  for (; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

double dot_avx2(std::size_t n, const double* x, const double* y) {
  __m256d acc = _mm256_setzero_pd();
  const std::size_t full = n - n % 4;
  for (std::size_t i = 0; i < full; i += 4) {
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  double s = (lane[0] + lane[1]) + (lane[2] + lane[3]);
  for (std::size_t i = full; i < n; ++i) s = s + x[i] * y[i];
  return s;
}

void add_avx2(std::size_t n, const double* x, const double* y, double* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) out[i] = x[i] + y[i];
}

void sub_avx2(std::size_t n, const double* x, const double* y, double* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) out[i] = x[i] - y[i];
}

void mul_avx2(std::size_t n, const double* x, const double* y, double* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) out[i] = x[i] * y[i];
}

void scale_avx2(std::size_t n, double alpha, const double* x, double* out) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) out[i] = alpha * x[i];
}

}  // namespace ortho::simd::detail
