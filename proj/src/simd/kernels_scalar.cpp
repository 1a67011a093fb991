#include <cstring>

#include "kernels_impl.hpp"

namespace ortho::simd::detail {

void gemm_scalar(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b,
                 double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    std::memset(crow, 0, n * sizeof(double));
    const double* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = arow[p];
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] = crow[j] + aip * brow[j];
    }
  }
}

void axpy_scalar(std::size_t n, double alpha, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

double dot_scalar(std::size_t n, const double* x, const double* y) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  const std::size_t full = n - n % 4;
  for (std::size_t i = 0; i < full; i += 4) {
    for (std::size_t l = 0; l < 4; ++l) lane[l] = lane[l] + x[i + l] * y[i + l];
  }
  double s = (lane[0] + lane[1]) + (lane[2] + lane[3]);
  for (std::size_t i = full; i < n; ++i) s = s + x[i] * y[i];
  return s;
}

void add_scalar(std::size_t n, const double* x, const double* y, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + y[i];
}

void sub_scalar(std::size_t n, const double* x, const double* y, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] - y[i];
}

void mul_scalar(std::size_t n, const double* x, const double* y, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * y[i];
}

void scale_scalar(std::size_t n, double alpha, const double* x, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = alpha * x[i];
}

}  // namespace ortho::simd::detail
