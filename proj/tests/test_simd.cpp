#include <cstring>
#include <vector>

#include "doctest.h"
#include "ortho/linalg.hpp"
#include "ortho/simd/kernels.hpp"
#include "test_util.hpp"

using namespace ortho;

namespace {

std::vector<double> randvec(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

std::vector<const simd::KernelTable*> variants() {
  std::vector<const simd::KernelTable*> out;
  if (auto* t = simd::avx2_kernels()) out.push_back(t);
  if (auto* t = simd::neon_kernels()) out.push_back(t);
  return out;
}

}  // namespace

TEST_SUITE("simd") {

TEST_CASE("scalar gemm matches the triple loop bit for bit") {
  const auto& s = simd::scalar_kernels();
  for (std::size_t m : {1, 3, 4, 7}) {
    for (std::size_t k : {1, 5, 16}) {
      for (std::size_t n : {1, 4, 8, 11, 19}) {
        const Matrix a = testutil::gaussian(m, k, m * 100 + k);
        const Matrix b = testutil::gaussian(k, n, n * 7 + 1);
        Matrix c(m, n);
        s.gemm(m, k, n, a.data().data(), b.data().data(), c.data().data());
        CHECK(c == testutil::naive_matmul(a, b));
      }
    }
  }
}

TEST_CASE("SIMD variants are bit-identical to the scalar reference") {
  const auto& s = simd::scalar_kernels();
  const auto vs = variants();
  if (vs.empty()) MESSAGE("no SIMD variant available on this machine");
  for (const auto* v : vs) {
    CAPTURE(simd::isa_name(v->isa));
    for (std::size_t m : {1, 2, 4, 5, 9}) {
      for (std::size_t k : {1, 3, 20, 64}) {
        for (std::size_t n : {1, 3, 4, 8, 13, 32, 33}) {
          const auto a = randvec(m * k, 11 + m + k);
          const auto b = randvec(k * n, 29 + n);
          std::vector<double> c0(m * n), c1(m * n);
          s.gemm(m, k, n, a.data(), b.data(), c0.data());
          v->gemm(m, k, n, a.data(), b.data(), c1.data());
          CHECK(same_bits(c0, c1));
        }
      }
    }
    for (std::size_t n : {0, 1, 3, 4, 5, 8, 17, 100, 1023}) {
      const auto x = randvec(n, n + 1), y = randvec(n, n + 2);
      CHECK(s.dot(n, x.data(), y.data()) == v->dot(n, x.data(), y.data()));
      std::vector<double> o0(n), o1(n);
      s.add(n, x.data(), y.data(), o0.data());
      v->add(n, x.data(), y.data(), o1.data());
      CHECK(same_bits(o0, o1));
      s.sub(n, x.data(), y.data(), o0.data());
      v->sub(n, x.data(), y.data(), o1.data());
      CHECK(same_bits(o0, o1));
      s.mul(n, x.data(), y.data(), o0.data());
      v->mul(n, x.data(), y.data(), o1.data());
      CHECK(same_bits(o0, o1));
      s.scale(n, -0.37, x.data(), o0.data());
      v->scale(n, -0.37, x.data(), o1.data());
      CHECK(same_bits(o0, o1));
      auto y0 = y, y1 = y;
      s.axpy(n, 1.7, x.data(), y0.data());
      v->axpy(n, 1.7, x.data(), y1.data());
      CHECK(same_bits(y0, y1));
    }
  }
}

TEST_CASE("scalar dot follows the documented 4-lane order") {
  const auto x = randvec(11, 3), y = randvec(11, 4);
  double lane[4] = {0, 0, 0, 0};
  for (std::size_t i = 0; i < 8; ++i) lane[i % 4] = lane[i % 4] + x[i] * y[i];
  double expect = (lane[0] + lane[1]) + (lane[2] + lane[3]);
  for (std::size_t i = 8; i < 11; ++i) expect = expect + x[i] * y[i];
  CHECK(simd::scalar_kernels().dot(11, x.data(), y.data()) == expect);
}

TEST_CASE("selection switches the active table and matmul results agree") {
  const simd::Isa before = simd::active().isa;
  const Matrix a = testutil::gaussian(37, 29, 1), b = testutil::gaussian(29, 23, 2);
  REQUIRE(simd::select(simd::Isa::scalar));
  CHECK(simd::active().isa == simd::Isa::scalar);
  const Matrix ref = matmul(a, b);
  for (const auto* v : variants()) {
    REQUIRE(simd::select(v->isa));
    CHECK(matmul(a, b) == ref);
  }
  CHECK(simd::select(before));
  if (!simd::neon_kernels()) CHECK_FALSE(simd::select(simd::Isa::neon));
}

}
