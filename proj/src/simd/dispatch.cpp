#include <atomic>
#include <cstdlib>
#include <string>

#include "kernels_impl.hpp"
#include "ortho/simd/kernels.hpp"

namespace ortho::simd {

namespace {

constexpr KernelTable kScalar{Isa::scalar,           detail::gemm_scalar, detail::axpy_scalar,
                              detail::dot_scalar,    detail::add_scalar,  detail::sub_scalar,
                              detail::mul_scalar,    detail::scale_scalar};

#if defined(ORTHO_HAVE_AVX2)
constexpr KernelTable kAvx2{Isa::avx2,        detail::gemm_avx2, detail::axpy_avx2,
                            detail::dot_avx2, detail::add_avx2,  detail::sub_avx2,
                            detail::mul_avx2, detail::scale_avx2};
#endif

#if defined(ORTHO_HAVE_NEON)
constexpr KernelTable kNeon{Isa::neon,        detail::gemm_neon, detail::axpy_neon,
                            detail::dot_neon, detail::add_neon,  detail::sub_neon,
                            detail::mul_neon, detail::scale_neon};
#endif

const KernelTable* table_for(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return &kScalar;
    case Isa::avx2:
      return avx2_kernels();
    case Isa::neon:
      return neon_kernels();
  }
  return nullptr;
}

const KernelTable* initial_selection() noexcept {
  if (const char* env = std::getenv("ORTHO_SIMD")) {
    const std::string want(env);
    if (want == "scalar") return &kScalar;
    if (want == "avx2" && avx2_kernels()) return avx2_kernels();
    if (want == "neon" && neon_kernels()) return neon_kernels();
  }
  if (const auto* t = avx2_kernels()) return t;
  if (const auto* t = neon_kernels()) return t;
  return &kScalar;
}

std::atomic<const KernelTable*>& current() noexcept {
  static std::atomic<const KernelTable*> table{initial_selection()};
  return table;
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
    case Isa::neon:
      return "neon";
  }
  return "unknown";
}

const KernelTable& scalar_kernels() noexcept { return kScalar; }

const KernelTable* avx2_kernels() noexcept {
#if defined(ORTHO_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? &kAvx2 : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable* neon_kernels() noexcept {
#if defined(ORTHO_HAVE_NEON)
  return &kNeon;
#else
  return nullptr;
#endif
}

const KernelTable& active() noexcept { return *current().load(std::memory_order_relaxed); }

bool select(Isa isa) noexcept {
  const KernelTable* t = table_for(isa);
  if (t == nullptr) return false;
  current().store(t, std::memory_order_relaxed);
  return true;
}

}  // namespace ortho::simd
