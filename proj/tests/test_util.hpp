#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <unistd.h>

#include "ortho/matrix.hpp"
#include "ortho/rng.hpp"

namespace testutil {

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("ortho_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Textbook triple loop, accumulating left to right.
inline ortho::Matrix naive_matmul(const ortho::Matrix& a, const ortho::Matrix& b) {
  ortho::Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < a.cols(); ++p) s = s + a(i, p) * b(p, j);
      c(i, j) = s;
    }
  }
  return c;
}

inline ortho::Matrix naive_transpose(const ortho::Matrix& a) {
  ortho::Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

// Two-pass covariance with divisor N-1, written out by hand.
inline ortho::Matrix naive_covariance(const ortho::Matrix& t) {
  const std::size_t n = t.rows(), d = t.cols();
  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) mean[j] += t(i, j);
  for (double& m : mean) m /= static_cast<double>(n);
  ortho::Matrix c(d, d);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += (t(i, a) - mean[a]) * (t(i, b) - mean[b]);
      c(a, b) = s / static_cast<double>(n - 1);
    }
  return c;
}

inline double frob_sq_of(const ortho::Matrix& m) {
  double s = 0.0;
  for (double v : m.data()) s += v * v;
  return s;
}

inline ortho::Matrix gaussian(std::size_t r, std::size_t c, std::uint64_t seed, double sd = 1.0) {
  ortho::Rng rng(seed);
  ortho::Matrix m(r, c);
  for (double& v : m.data()) v = sd * rng.normal();
  return m;
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

}  // namespace testutil
