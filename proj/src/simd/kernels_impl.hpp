#pragma once

#include <cstddef>

namespace ortho::simd::detail {

void gemm_scalar(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b,
                 double* c);
void axpy_scalar(std::size_t n, double alpha, const double* x, double* y);
double dot_scalar(std::size_t n, const double* x, const double* y);
void add_scalar(std::size_t n, const double* x, const double* y, double* out);
void sub_scalar(std::size_t n, const double* x, const double* y, double* out);
void mul_scalar(std::size_t n, const double* x, const double* y, double* out);
void scale_scalar(std::size_t n, double alpha, const double* x, double* out);

#if defined(ORTHO_HAVE_AVX2)
void gemm_avx2(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b,
               double* c);
void axpy_avx2(std::size_t n, double alpha, const double* x, double* y);
double dot_avx2(std::size_t n, const double* x, const double* y);
void add_avx2(std::size_t n, const double* x, const double* y, double* out);
void sub_avx2(std::size_t n, const double* x, const double* y, double* out);
void mul_avx2(std::size_t n, const double* x, const double* y, double* out);
void scale_avx2(std::size_t n, double alpha, const double* x, double* out);
#endif

#if defined(ORTHO_HAVE_NEON)
void gemm_neon(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b,
               double* c);
void axpy_neon(std::size_t n, double alpha, const double* x, double* y);
double dot_neon(std::size_t n, const double* x, const double* y);
void add_neon(std::size_t n, const double* x, const double* y, double* out);
void sub_neon(std::size_t n, const double* x, const double* y, double* out);
void mul_neon(std::size_t n, const double* x, const double* y, double* out);
void scale_neon(std::size_t n, double alpha, const double* x, double* out);
#endif

}  // namespace ortho::simd::detail
