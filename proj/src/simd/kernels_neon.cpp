// AArch64 variant. vmulq/vaddq only; vfmaq would change rounding.

#include <arm_neon.h>

#include "kernels_impl.hpp"

namespace ortho::simd::detail {

void gemm_neon(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b,
               double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      float64x2_t acc0 = vdupq_n_f64(0.0);
      float64x2_t acc1 = vdupq_n_f64(0.0);
      for (std::size_t p = 0; p < k; ++p) {
        const float64x2_t av = vdupq_n_f64(arow[p]);
        const double* brow = b + p * n + j;
        acc0 = vaddq_f64(acc0, vmulq_f64(av, vld1q_f64(brow)));
        acc1 = vaddq_f64(acc1, vmulq_f64(av, vld1q_f64(brow + 2)));
      }
      vst1q_f64(crow + j, acc0);
      vst1q_f64(crow + j + 2, acc1);
    }
    for (; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc = acc + arow[p] * b[p * n + j];
      crow[j] = acc;
    }
  }
}

void axpy_neon(std::size_t n, double alpha, const double* x, double* y) {
  const float64x2_t av = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(av, vld1q_f64(x + i))));
  }
  for (; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

double dot_neon(std::size_t n, const double* x, const double* y) {
  // lanes {0,1} and {2,3} of the 4-lane reference order
  float64x2_t lo = vdupq_n_f64(0.0);
  float64x2_t hi = vdupq_n_f64(0.0);
  const std::size_t full = n - n % 4;
  for (std::size_t i = 0; i < full; i += 4) {
    lo = vaddq_f64(lo, vmulq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
    hi = vaddq_f64(hi, vmulq_f64(vld1q_f64(x + i + 2), vld1q_f64(y + i + 2)));
  }
  double s = (vgetq_lane_f64(lo, 0) + vgetq_lane_f64(lo, 1)) +
             (vgetq_lane_f64(hi, 0) + vgetq_lane_f64(hi, 1));
  for (std::size_t i = full; i < n; ++i) s = s + x[i] * y[i];
  return s;
}

void add_neon(std::size_t n, const double* x, const double* y, double* out) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vaddq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
  for (; i < n; ++i) out[i] = x[i] + y[i];
}

void sub_neon(std::size_t n, const double* x, const double* y, double* out) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vsubq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
  for (; i < n; ++i) out[i] = x[i] - y[i];
}

void mul_neon(std::size_t n, const double* x, const double* y, double* out) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vmulq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
  for (; i < n; ++i) out[i] = x[i] * y[i];
}

void scale_neon(std::size_t n, double alpha, const double* x, double* out) {
  const float64x2_t av = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vmulq_f64(av, vld1q_f64(x + i)));
  for (; i < n; ++i) out[i] = alpha * x[i];
}

}  // namespace ortho::simd::detail
