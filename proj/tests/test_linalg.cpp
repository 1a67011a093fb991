#include <cmath>

#include "doctest.h"
#include "ortho/errors.hpp"
#include "ortho/linalg.hpp"
#include "test_util.hpp"

using namespace ortho;
using doctest::Approx;

TEST_SUITE("linalg") {

TEST_CASE("matmul small cases") {
  const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
  CHECK(matmul(a, Matrix::from_rows({{0}, {1}})) == Matrix::from_rows({{2}, {4}}));
  const Matrix r = testutil::gaussian(3, 5, 9);
  CHECK(matmul(Matrix::identity(3), r) == r);
  CHECK_THROWS_AS(matmul(a, Matrix(3, 1)), DimensionError);
}

TEST_CASE("matmul equals the triple-loop oracle and is associative") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Matrix a = testutil::gaussian(5, 4, s), b = testutil::gaussian(4, 3, s + 100);
    CHECK(matmul(a, b) == testutil::naive_matmul(a, b));
    const Matrix c = testutil::gaussian(3, 6, s + 200);
    const Matrix l = matmul(matmul(a, b), c), r = matmul(a, matmul(b, c));
    CHECK(frobenius(sub(l, r)) <= 1e-9 * frobenius(l));
  }
}

TEST_CASE("elementwise helpers") {
  const Matrix a = testutil::gaussian(4, 3, 1), b = testutil::gaussian(4, 3, 2);
  CHECK(transpose(a) == testutil::naive_transpose(a));
  CHECK(add(a, b)(2, 1) == a(2, 1) + b(2, 1));
  CHECK(sub(a, b)(0, 2) == a(0, 2) - b(0, 2));
  CHECK(hadamard(a, b)(3, 0) == a(3, 0) * b(3, 0));
  CHECK(scale(a, 2.5)(1, 1) == 2.5 * a(1, 1));
  CHECK(frobenius_sq(a) == Approx(testutil::frob_sq_of(a)).epsilon(1e-14));
  CHECK(trace(Matrix::diagonal({1, 2, 3})) == 6.0);
  CHECK(sub_identity(Matrix::identity(3)) == Matrix(3, 3));
  Matrix y = a;
  axpy_inplace(y, -1.0, a);
  CHECK(max_abs(y) == 0.0);
  CHECK_THROWS_AS(add(a, Matrix(3, 4)), DimensionError);
}

TEST_CASE("covariance") {
  const Matrix pts = Matrix::from_rows({{1, 0}, {-1, 0}, {0, 2}, {0, -2}});
  const Matrix c = covariance(pts);
  CHECK(c(0, 0) == Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(c(1, 1) == Approx(8.0 / 3.0).epsilon(1e-15));
  CHECK(c(0, 1) == 0.0);
  CHECK(covariance(Matrix::from_rows({{1, 2}, {1, 2}, {1, 2}})) == Matrix(2, 2));
  CHECK_THROWS_AS(covariance(Matrix(1, 3)), InsufficientSamplesError);

  const Matrix t = testutil::gaussian(50, 4, 5);
  const Matrix cv = covariance(t);
  CHECK(max_abs_diff(cv, testutil::naive_covariance(t)) <= 1e-12);
  CHECK(max_abs_diff(cv, transpose(cv)) <= 1e-12);
  for (double ev : sym_eig(cv).eigenvalues) CHECK(ev >= -1e-10);

  const Matrix cn = covariance(t, CovDivisor::n);
  CHECK(cn(1, 2) == Approx(cv(1, 2) * 49.0 / 50.0).epsilon(1e-13));
}

TEST_CASE("sym_eig closed forms") {
  CHECK(sym_eig(Matrix::diagonal({3, 1})).eigenvalues == std::vector<double>{3, 1});
  const auto e = sym_eig(Matrix::from_rows({{2, 1}, {1, 2}}));
  CHECK(e.eigenvalues[0] == Approx(3.0).epsilon(1e-14));
  CHECK(e.eigenvalues[1] == Approx(1.0).epsilon(1e-14));
  CHECK(sym_eig(Matrix::identity(5)).eigenvalues == std::vector<double>(5, 1.0));
  CHECK_THROWS_AS(sym_eig(Matrix(2, 3)), DimensionError);
  CHECK_THROWS_AS(sym_eig(Matrix::from_rows({{1, 1}, {0, 1}})), DimensionError);
}

TEST_CASE("sym_eig reconstruction, orthogonality, trace") {
  for (std::uint64_t s = 0; s < 30; ++s) {
    const std::size_t n = 2 + s % 15;
    const Matrix g = testutil::gaussian(n, n, s);
    const Matrix a = scale(add(g, transpose(g)), 0.5);
    const auto e = sym_eig(a);
    for (std::size_t k = 1; k < n; ++k) CHECK(e.eigenvalues[k] <= e.eigenvalues[k - 1]);
    const Matrix& v = e.eigenvectors;
    const Matrix rec = matmul(matmul(v, Matrix::diagonal(e.eigenvalues)), transpose(v));
    CHECK(frobenius(sub(rec, a)) <= 1e-8 * (1.0 + frobenius(a)));
    CHECK(max_abs(sub_identity(matmul(transpose(v), v))) <= 1e-8);
    double sum = 0.0;
    for (double ev : e.eigenvalues) sum += ev;
    CHECK(std::abs(sum - trace(a)) <= 1e-9 * std::max(1.0, std::abs(trace(a))));
    for (std::size_t k = 0; k < n; ++k) {
      double worst = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double av = 0.0;
        for (std::size_t j = 0; j < n; ++j) av += a(i, j) * v(j, k);
        worst = std::max(worst, std::abs(av - e.eigenvalues[k] * v(i, k)));
      }
      CHECK(worst <= 1e-8 * (1.0 + std::abs(e.eigenvalues[0])));
    }
  }
}

TEST_CASE("power iteration") {
  CHECK(power_iter_specnorm(Matrix(4, 4), 7) == 0.0);
  for (std::uint64_t s = 0; s < 20; ++s) {
    CHECK(power_iter_specnorm(Matrix::diagonal({3, 0}), s) == Approx(3.0).epsilon(1e-12));
  }
  const std::vector<double> v0 = {0.3, -1.2};
  CHECK(power_iter_specnorm(Matrix::diagonal({3, 0}), v0) == Approx(3.0).epsilon(1e-12));
  for (std::uint64_t s = 0; s < 50; ++s) {
    const Matrix g = testutil::gaussian(8, 8, s);
    const Matrix m = scale(add(g, transpose(g)), 0.5);
    CHECK(power_iter_specnorm(m, s) <= spectral_norm_symmetric(m) + 1e-9);
  }
  CHECK_THROWS_AS(power_iter_specnorm(Matrix(2, 3), 1), DimensionError);
}

TEST_CASE("standard normal draws are seed-determined") {
  CHECK(standard_normal_vector(6, 42) == standard_normal_vector(6, 42));
  CHECK(standard_normal_vector(6, 42) != standard_normal_vector(6, 43));
}

TEST_CASE("random_orthogonal") {
  Rng rng(3);
  const Matrix tall = random_orthogonal(8, 3, rng);
  CHECK(max_abs(sub_identity(matmul(transpose(tall), tall))) <= 1e-12);
  const Matrix wide = random_orthogonal(3, 8, rng);
  CHECK(max_abs(sub_identity(matmul(wide, transpose(wide)))) <= 1e-12);
}

}
