#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ortho/matrix.hpp"
#include "ortho/rng.hpp"

namespace ortho {

enum class CovDivisor { n_minus_1, n };

// Elementwise and product arithmetic. Shape mismatches throw DimensionError.
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double alpha);
/// a - I for square a.
Matrix sub_identity(const Matrix& a);
/// y += alpha * x
void axpy_inplace(Matrix& y, double alpha, const Matrix& x);

double dot(std::span<const double> x, std::span<const double> y);
double frobenius_sq(const Matrix& a);
double frobenius(const Matrix& a);
double trace(const Matrix& a);
double max_abs(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);

/// 1 x cols row of column means.
Matrix column_means(const Matrix& t);
Matrix center_columns(const Matrix& t);

/// Sample covariance of the columns of t (rows are samples). Needs t.rows() >= 2.
Matrix covariance(const Matrix& t, CovDivisor divisor = CovDivisor::n_minus_1);

struct Eigensystem {
  std::vector<double> eigenvalues;  // non-increasing
  Matrix eigenvectors;              // column k pairs with eigenvalues[k]
  int sweeps = 0;
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
/// Input is symmetrized as (a + a^T) / 2 first; asymmetry above 1e-9 is a
/// DimensionError. Stops when every off-diagonal magnitude is at most
/// 1e-12 * ||a||_F; throws ConvergenceError after 100 sweeps.
Eigensystem sym_eig(const Matrix& a);

/// Largest |eigenvalue| of a symmetric matrix, via sym_eig.
double spectral_norm_symmetric(const Matrix& m);

/// Two-step power-iteration estimate of the spectral norm of square m:
/// u = m v0, v = m u, returns ||v|| / ||u||. Returns 0 when ||u|| < 1e-12.
double power_iter_specnorm(const Matrix& m, std::span<const double> v0);
/// Same, with v0 drawn from N(0, 1) using the given seed.
double power_iter_specnorm(const Matrix& m, std::uint64_t seed);
std::vector<double> standard_normal_vector(std::size_t n, std::uint64_t seed);

constexpr double kPowerIterDegenerate = 1e-12;

Matrix random_normal(std::size_t rows, std::size_t cols, Rng& rng, double stddev = 1.0);
/// rows x cols matrix with orthonormal columns (rows >= cols) or rows
/// (rows < cols), from Gram-Schmidt QR of a Gaussian matrix.
Matrix random_orthogonal(std::size_t rows, std::size_t cols, Rng& rng);

}  // namespace ortho
