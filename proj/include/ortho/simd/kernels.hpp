#pragma once

// Data-parallel inner loops behind Matrix arithmetic.
//
// Every variant performs the same floating-point operations in the same
// order as the scalar reference, so results are bit-identical across ISAs.
// This requires building without FP contraction (no implicit FMA); the
// top-level CMakeLists sets -ffp-contract=off.
//
// gemm keeps strict left-to-right accumulation per output entry:
//   c[i][j] = (((0 + a[i][0]*b[0][j]) + a[i][1]*b[1][j]) + ...)
// SIMD variants vectorize across j and block over i, never across k.
//
// dot uses a fixed 4-lane split: lane l sums indices i = l (mod 4) over
// the full blocks, lanes are combined as (l0 + l1) + (l2 + l3), and the
// tail is added sequentially.

#include <cstddef>
#include <string_view>

namespace ortho::simd {

enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa) noexcept;

struct KernelTable {
  Isa isa;
  // c (m x n) = a (m x k) * b (k x n); all row-major, c is overwritten.
  void (*gemm)(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b,
               double* c);
  // y += alpha * x
  void (*axpy)(std::size_t n, double alpha, const double* x, double* y);
  double (*dot)(std::size_t n, const double* x, const double* y);
  void (*add)(std::size_t n, const double* x, const double* y, double* out);
  void (*sub)(std::size_t n, const double* x, const double* y, double* out);
  void (*mul)(std::size_t n, const double* x, const double* y, double* out);
  void (*scale)(std::size_t n, double alpha, const double* x, double* out);
};

const KernelTable& scalar_kernels() noexcept;

/// nullptr when the variant was not compiled in or the CPU lacks it.
const KernelTable* avx2_kernels() noexcept;
const KernelTable* neon_kernels() noexcept;

/// The table used by Matrix arithmetic. Picked once on first use: the widest
/// supported variant, unless ORTHO_SIMD=scalar|avx2|neon says otherwise.
const KernelTable& active() noexcept;

/// Override the active table (tests, benchmarks). Returns false and leaves
/// the selection unchanged if the ISA is unavailable.
bool select(Isa isa) noexcept;

}  // namespace ortho::simd
