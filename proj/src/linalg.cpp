#include "ortho/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ortho/errors.hpp"
#include "ortho/simd/kernels.hpp"

namespace ortho {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " +
                         b.shape_string());
  }
}

constexpr int kMaxJacobiSweeps = 100;
constexpr double kJacobiRelTol = 1e-12;
constexpr double kSymmetryTol = 1e-9;

double max_offdiag(const Matrix& a) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      if (i != j) m = std::max(m, std::abs(a(i, j)));
    }
  }
  return m;
}

// Rotate rows/cols p, q of symmetric a to annihilate a(p, q); accumulate into v.
void jacobi_rotate(Matrix& a, Matrix& v, std::size_t p, std::size_t q) {
  const double apq = a(p, q);
  const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
  const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
  const double c = 1.0 / std::sqrt(t * t + 1.0);
  const double s = t * c;
  const std::size_t n = a.rows();

  const double app = a(p, p);
  const double aqq = a(q, q);
  for (std::size_t k = 0; k < n; ++k) {
    if (k == p || k == q) continue;
    const double akp = a(k, p);
    const double akq = a(k, q);
    a(k, p) = a(p, k) = c * akp - s * akq;
    a(k, q) = a(q, k) = s * akp + c * akq;
  }
  a(p, p) = app - t * apq;
  a(q, q) = aqq + t * apq;
  a(p, q) = a(q, p) = 0.0;

  for (std::size_t k = 0; k < n; ++k) {
    const double vkp = v(k, p);
    const double vkq = v(k, q);
    v(k, p) = c * vkp - s * vkq;
    v(k, q) = s * vkp + c * vkq;
  }
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: " + a.shape_string() + " * " + b.shape_string());
  }
  Matrix c(a.rows(), b.cols());
  if (c.empty()) return c;
  simd::active().gemm(a.rows(), a.cols(), b.cols(), a.data().data(), b.data().data(),
                      c.data().data());
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  }
  return t;
}

Matrix add(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "add");
  Matrix out(a.rows(), a.cols());
  simd::active().add(a.size(), a.data().data(), b.data().data(), out.data().data());
  return out;
}

Matrix sub(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "sub");
  Matrix out(a.rows(), a.cols());
  simd::active().sub(a.size(), a.data().data(), b.data().data(), out.data().data());
  return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "hadamard");
  Matrix out(a.rows(), a.cols());
  simd::active().mul(a.size(), a.data().data(), b.data().data(), out.data().data());
  return out;
}

Matrix scale(const Matrix& a, double alpha) {
  Matrix out(a.rows(), a.cols());
  simd::active().scale(a.size(), alpha, a.data().data(), out.data().data());
  return out;
}

Matrix sub_identity(const Matrix& a) {
  if (!a.is_square()) throw DimensionError("sub_identity: non-square " + a.shape_string());
  Matrix out = a;
  for (std::size_t i = 0; i < a.rows(); ++i) out(i, i) -= 1.0;
  return out;
}

void axpy_inplace(Matrix& y, double alpha, const Matrix& x) {
  require_same_shape(y, x, "axpy");
  simd::active().axpy(x.size(), alpha, x.data().data(), y.data().data());
}

double dot(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionError("dot: length mismatch");
  return simd::active().dot(x.size(), x.data(), y.data());
}

double frobenius_sq(const Matrix& a) { return dot(a.data(), a.data()); }

double frobenius(const Matrix& a) { return std::sqrt(frobenius_sq(a)); }

double trace(const Matrix& a) {
  if (!a.is_square()) throw DimensionError("trace: non-square " + a.shape_string());
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) s += a(i, i);
  return s;
}

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) { return max_abs(sub(a, b)); }

Matrix column_means(const Matrix& t) {
  Matrix mean(1, t.cols());
  if (t.rows() == 0) return mean;
  for (std::size_t i = 0; i < t.rows(); ++i) {
    for (std::size_t j = 0; j < t.cols(); ++j) mean(0, j) += t(i, j);
  }
  const double inv = 1.0 / static_cast<double>(t.rows());
  for (std::size_t j = 0; j < t.cols(); ++j) mean(0, j) *= inv;
  return mean;
}

Matrix center_columns(const Matrix& t) {
  const Matrix mean = column_means(t);
  Matrix c = t;
  for (std::size_t i = 0; i < t.rows(); ++i) {
    for (std::size_t j = 0; j < t.cols(); ++j) c(i, j) -= mean(0, j);
  }
  return c;
}

Matrix covariance(const Matrix& t, CovDivisor divisor) {
  if (t.rows() < 2) {
    throw InsufficientSamplesError("covariance needs at least 2 rows, got " +
                                   std::to_string(t.rows()));
  }
  const Matrix c = center_columns(t);
  Matrix cov = matmul(transpose(c), c);
  const double denom =
      static_cast<double>(divisor == CovDivisor::n_minus_1 ? t.rows() - 1 : t.rows());
  for (double& v : cov.data()) v /= denom;
  // exact symmetry regardless of accumulation order
  for (std::size_t i = 0; i < cov.rows(); ++i) {
    for (std::size_t j = i + 1; j < cov.cols(); ++j) cov(j, i) = cov(i, j);
  }
  return cov;
}

Eigensystem sym_eig(const Matrix& input) {
  if (!input.is_square()) throw DimensionError("sym_eig: non-square " + input.shape_string());
  const std::size_t n = input.rows();
  if (max_abs_diff(input, transpose(input)) > kSymmetryTol) {
    throw DimensionError("sym_eig: input is not symmetric");
  }
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) a(i, j) = 0.5 * (input(i, j) + input(j, i));
  }
  Matrix v = Matrix::identity(n);
  const double tol = kJacobiRelTol * frobenius(a);

  int sweep = 0;
  for (;; ++sweep) {
    const double off = max_offdiag(a);
    if (off <= tol) break;
    if (sweep == kMaxJacobiSweeps) {
      throw ConvergenceError("sym_eig: no convergence after 100 sweeps", off);
    }
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a(p, q) != 0.0) jacobi_rotate(a, v, p, q);
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  Eigensystem es;
  es.sweeps = sweep;
  es.eigenvalues.resize(n);
  es.eigenvectors = Matrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    es.eigenvalues[k] = a(order[k], order[k]);
    for (std::size_t i = 0; i < n; ++i) es.eigenvectors(i, k) = v(i, order[k]);
  }
  return es;
}

double spectral_norm_symmetric(const Matrix& m) {
  const Eigensystem es = sym_eig(m);
  double s = 0.0;
  for (double l : es.eigenvalues) s = std::max(s, std::abs(l));
  return s;
}

double power_iter_specnorm(const Matrix& m, std::span<const double> v0) {
  if (!m.is_square()) throw DimensionError("power_iter_specnorm: non-square " + m.shape_string());
  if (v0.size() != m.cols()) throw DimensionError("power_iter_specnorm: v0 length mismatch");
  const Matrix v0m(m.cols(), 1, std::vector<double>(v0.begin(), v0.end()));
  const Matrix u = matmul(m, v0m);
  const double unorm = frobenius(u);
  if (unorm < kPowerIterDegenerate) return 0.0;
  const Matrix v = matmul(m, u);
  return frobenius(v) / unorm;
}

std::vector<double> standard_normal_vector(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

double power_iter_specnorm(const Matrix& m, std::uint64_t seed) {
  return power_iter_specnorm(m, standard_normal_vector(m.cols(), seed));
}

Matrix random_normal(std::size_t rows, std::size_t cols, Rng& rng, double stddev) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.normal(0.0, stddev);
  return m;
}

Matrix random_orthogonal(std::size_t rows, std::size_t cols, Rng& rng) {
  const bool tall = rows >= cols;
  const std::size_t n = tall ? rows : cols;  // vector length
  const std::size_t k = tall ? cols : rows;  // vector count
  Matrix q = random_normal(k, n, rng);       // rows are the vectors
  for (std::size_t i = 0; i < k; ++i) {
    auto qi = q.row(i);
    // two Gram-Schmidt passes for orthogonality at rounding level
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t j = 0; j < i; ++j) {
        auto qj = q.row(j);
        const double proj = dot(qi, qj);
        for (std::size_t t = 0; t < n; ++t) qi[t] -= proj * qj[t];
      }
    }
    const double norm = std::sqrt(dot(qi, qi));
    for (double& x : qi) x /= norm;
  }
  return tall ? transpose(q) : q;
}

}  // namespace ortho
