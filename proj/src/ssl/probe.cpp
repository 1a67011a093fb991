#include "ortho/ssl/probe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "ortho/errors.hpp"
#include "ortho/linalg.hpp"
#include "ortho/rng.hpp"

namespace ortho::ssl {

namespace {

std::size_t argmax_row(const Matrix& m, std::size_t r) {
  const auto row = m.row(r);
  return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

// Row-wise softmax in place.
void softmax_rows(Matrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto row = m.row(i);
    const double mx = *std::max_element(row.begin(), row.end());
    double total = 0.0;
    for (double& v : row) total += (v = std::exp(v - mx));
    for (double& v : row) v /= total;
  }
}

}  // namespace

ProbeResult linear_probe(const Matrix& repr, const std::vector<int>& labels,
                         const ProbeConfig& cfg, std::uint64_t split_seed) {
  const std::size_t n = repr.rows();
  if (labels.size() != n) {
    throw DimensionError("linear_probe: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(n) + " rows");
  }
  std::vector<int> classes(labels);
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  if (classes.size() < 2) throw std::invalid_argument("linear_probe: need at least 2 classes");
  if (n < 5) throw InsufficientSamplesError("linear_probe: need at least 5 rows");
  std::vector<std::size_t> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = static_cast<std::size_t>(
        std::lower_bound(classes.begin(), classes.end(), labels[i]) - classes.begin());
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(split_seed);
  std::shuffle(order.begin(), order.end(), rng.engine());
  const std::size_t n_test = std::max<std::size_t>(1, n / 5);
  const std::size_t n_train = n - n_test;

  const std::size_t d = repr.cols();
  const std::size_t k = classes.size();
  Matrix xtr(n_train, d), xte(n_test, d);
  std::vector<std::size_t> ytr(n_train), yte(n_test);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t src = order[i];
    Matrix& dst = i < n_train ? xtr : xte;
    const std::size_t r = i < n_train ? i : i - n_train;
    std::copy(repr.row(src).begin(), repr.row(src).end(), dst.row(r).begin());
    (i < n_train ? ytr[r] : yte[r]) = y[src];
  }

  // standardize with training statistics
  const Matrix mean = column_means(xtr);
  std::vector<double> sd(d, 0.0);
  for (std::size_t i = 0; i < n_train; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double c = xtr(i, j) - mean(0, j);
      sd[j] += c * c;
    }
  }
  for (double& s : sd) {
    s = std::sqrt(s / static_cast<double>(n_train));
    if (s < 1e-12) s = 1.0;
  }
  for (Matrix* x : {&xtr, &xte}) {
    for (std::size_t i = 0; i < x->rows(); ++i) {
      for (std::size_t j = 0; j < d; ++j) (*x)(i, j) = ((*x)(i, j) - mean(0, j)) / sd[j];
    }
  }

  Matrix w(d, k), b(1, k);
  const Matrix xtr_t = transpose(xtr);
  const double inv_n = 1.0 / static_cast<double>(n_train);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Matrix p = matmul(xtr, w);
    for (std::size_t i = 0; i < n_train; ++i) {
      for (std::size_t c = 0; c < k; ++c) p(i, c) += b(0, c);
    }
    softmax_rows(p);
    for (std::size_t i = 0; i < n_train; ++i) p(i, ytr[i]) -= 1.0;
    const Matrix gw = matmul(xtr_t, p);
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t c = 0; c < k; ++c) w(j, c) -= cfg.lr * inv_n * gw(j, c);
    }
    for (std::size_t c = 0; c < k; ++c) {
      double g = 0.0;
      for (std::size_t i = 0; i < n_train; ++i) g += p(i, c);
      b(0, c) -= cfg.lr * inv_n * g;
    }
  }

  auto accuracy = [&](const Matrix& x, const std::vector<std::size_t>& truth) {
    Matrix s = matmul(x, w);
    std::size_t hit = 0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      for (std::size_t c = 0; c < k; ++c) s(i, c) += b(0, c);
      hit += argmax_row(s, i) == truth[i];
    }
    return static_cast<double>(hit) / static_cast<double>(x.rows());
  };
  ProbeResult r;
  r.accuracy = accuracy(xte, yte);
  r.train_accuracy = accuracy(xtr, ytr);
  r.n_train = n_train;
  r.n_test = n_test;
  return r;
}

}  // namespace ortho::ssl
