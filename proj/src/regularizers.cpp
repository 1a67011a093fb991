#include "ortho/regularizers.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <spdlog/spdlog.h>

#include "ortho/errors.hpp"
#include "ortho/rng.hpp"

namespace ortho {

namespace {

using autodiff::Tape;
using autodiff::Var;

bool uses_column_gram(const Matrix& w) { return w.rows() > w.cols(); }

Matrix gram_residual(const Matrix& w) {
  if (w.empty()) throw DimensionError("orthogonality regularizer: empty weight");
  const Matrix wt = transpose(w);
  return sub_identity(uses_column_gram(w) ? matmul(wt, w) : matmul(w, wt));
}

// Sum in a canonical order (by magnitude, sign breaking ties), so every
// permutation of the same terms gives the same bits.
double canonical_sum(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end(), [](double a, double b) {
    const double ma = std::abs(a), mb = std::abs(b);
    return ma < mb || (ma == mb && a < b);
  });
  double s = 0.0;
  for (double t : terms) s += t;
  return s;
}

// ||Gram - I||_F^2 independent of the order in which W's rows are listed.
// Column Gram entries sum over rows, so each is summed canonically; row Gram
// entries only move under a row permutation, so the final sum is canonical.
double so_loss_canonical(const Matrix& w) {
  if (w.empty()) throw DimensionError("orthogonality regularizer: empty weight");
  std::vector<double> squares;
  if (uses_column_gram(w)) {
    const std::size_t n = w.cols();
    std::vector<double> products(w.rows());
    squares.reserve(n * n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) {
        for (std::size_t r = 0; r < w.rows(); ++r) products[r] = w(r, i) * w(r, j);
        const double g = canonical_sum(products) - (i == j ? 1.0 : 0.0);
        squares.push_back(g * g);
        if (j != i) squares.push_back(g * g);
      }
    }
  } else {
    const Matrix residual = sub_identity(matmul(w, transpose(w)));
    squares.reserve(residual.size());
    for (double v : residual.data()) squares.push_back(v * v);
  }
  return canonical_sum(squares);
}

double divisor_for(std::size_t n, CovDivisor d) {
  return static_cast<double>(d == CovDivisor::n_minus_1 ? n - 1 : n);
}

void require_samples(std::size_t rows, const char* what) {
  if (rows < 2) {
    throw InsufficientSamplesError(std::string(what) + " needs at least 2 rows, got " +
                                   std::to_string(rows));
  }
}

Var taped_gram_residual(Tape& tape, Var w) {
  const Matrix& wv = tape.value(w);
  if (wv.empty()) throw DimensionError("orthogonality regularizer: empty weight");
  const Var wt = tape.transpose(w);
  return tape.sub_identity(uses_column_gram(wv) ? tape.matmul(wt, w) : tape.matmul(w, wt));
}

Var taped_covariance(Tape& tape, Var h, CovDivisor divisor) {
  const std::size_t n = tape.value(h).rows();
  const Var c = tape.center_cols(h);
  return tape.scale(tape.matmul(tape.transpose(c), c), 1.0 / divisor_for(n, divisor));
}

}  // namespace

std::string_view to_string(LayerKind kind) noexcept {
  switch (kind) {
    case LayerKind::linear:
      return "linear";
    case LayerKind::conv:
      return "conv";
    case LayerKind::bias:
      return "bias";
    case LayerKind::norm:
      return "norm";
  }
  return "?";
}

LayerKind layer_kind_from_string(std::string_view s) {
  if (s == "linear") return LayerKind::linear;
  if (s == "conv") return LayerKind::conv;
  if (s == "bias") return LayerKind::bias;
  if (s == "norm") return LayerKind::norm;
  throw std::invalid_argument("unknown layer kind '" + std::string(s) + "'");
}

std::string_view to_string(RegularizerKind kind) noexcept {
  switch (kind) {
    case RegularizerKind::none:
      return "none";
    case RegularizerKind::so:
      return "so";
    case RegularizerKind::srip:
      return "srip";
    case RegularizerKind::vicreg_whiten:
      return "vicreg-whiten";
  }
  return "?";
}

RegularizerKind regularizer_kind_from_string(std::string_view s) {
  if (s == "none") return RegularizerKind::none;
  if (s == "so") return RegularizerKind::so;
  if (s == "srip") return RegularizerKind::srip;
  if (s == "vicreg-whiten" || s == "vicreg_whiten") return RegularizerKind::vicreg_whiten;
  throw std::invalid_argument("unknown regularizer '" + std::string(s) + "'");
}

double recipe_gamma(RegularizerKind kind) noexcept {
  switch (kind) {
    case RegularizerKind::so:
      return 1e-6;
    case RegularizerKind::srip:
      return 1e-3;
    default:
      return 0.0;
  }
}

double so_loss(const Matrix& w) { return so_loss_canonical(w); }

Matrix so_grad(const Matrix& w) {
  const Matrix residual = gram_residual(w);
  return scale(uses_column_gram(w) ? matmul(w, residual) : matmul(residual, w), 4.0);
}

double srip_loss(const Matrix& w, std::uint64_t seed) {
  return power_iter_specnorm(gram_residual(w), seed);
}

Matrix srip_grad(const Matrix& w, std::uint64_t seed) {
  Tape tape;
  const Var wv = tape.param(w);
  const Var loss = taped::srip_loss(tape, wv, seed);
  tape.backward(loss);
  return tape.grad(wv);
}

std::uint64_t srip_layer_seed(std::uint64_t stream, std::uint64_t step,
                              std::size_t layer) noexcept {
  return derive_seed(stream, step, layer);
}

double or_loss(std::span<const LayerSpec> encoder, const RegularizerConfig& cfg,
               std::uint64_t step) {
  if (cfg.kind != RegularizerKind::so && cfg.kind != RegularizerKind::srip) {
    throw ContractError("or_loss: regularizer kind must be so or srip");
  }
  double total = 0.0;
  std::size_t eligible = 0;
  for (const auto& layer : encoder) {
    if (!layer.or_eligible()) continue;
    total += cfg.kind == RegularizerKind::so
                 ? so_loss(layer.weight)
                 : srip_loss(layer.weight, srip_layer_seed(cfg.srip_seed, step, eligible));
    ++eligible;
  }
  if (eligible == 0) spdlog::warn("or_loss: no linear/conv layers in encoder, OR term is 0");
  return total;
}

double combined_loss(double loss_ssl, double loss_or, double gamma) {
  if (gamma < 0.0) throw std::invalid_argument("combined_loss: gamma must be >= 0");
  return loss_ssl + gamma * loss_or;
}

double vicreg_variance_loss(const Matrix& h, double threshold, double epsilon,
                            CovDivisor divisor) {
  require_samples(h.rows(), "vicreg_variance_loss");
  const Matrix cov = covariance(h, divisor);
  double total = 0.0;
  for (std::size_t d = 0; d < h.cols(); ++d) {
    total += std::max(0.0, threshold - std::sqrt(cov(d, d) + epsilon));
  }
  return total / static_cast<double>(h.cols());
}

double vicreg_covariance_loss(const Matrix& h, CovDivisor divisor) {
  require_samples(h.rows(), "vicreg_covariance_loss");
  const Matrix cov = covariance(h, divisor);
  double total = 0.0;
  for (std::size_t i = 0; i < cov.rows(); ++i) {
    for (std::size_t j = 0; j < cov.cols(); ++j) {
      if (i != j) total += cov(i, j) * cov(i, j);
    }
  }
  return total;
}

namespace taped {

Var so_loss(Tape& tape, Var w) { return tape.frob_sq(taped_gram_residual(tape, w)); }

Var srip_loss(Tape& tape, Var w, std::uint64_t seed) {
  const Var m = taped_gram_residual(tape, w);
  const std::size_t n = tape.value(m).cols();
  const Var v0 = tape.constant(Matrix(n, 1, standard_normal_vector(n, seed)));
  const Var u = tape.matmul(m, v0);
  const Var unorm = tape.norm(u);
  if (tape.scalar(unorm) < kPowerIterDegenerate) return tape.constant(Matrix(1, 1, 0.0));
  const Var v = tape.matmul(m, u);
  return tape.div(tape.norm(v), unorm);
}

Var vicreg_variance_loss(Tape& tape, Var h, double threshold, double epsilon,
                         CovDivisor divisor) {
  const std::size_t n = tape.value(h).rows();
  require_samples(n, "vicreg_variance_loss");
  const Var c = tape.center_cols(h);
  // column variance = mean(c^2) * n / divisor
  const Var var = tape.scale(tape.col_mean(tape.mul(c, c)),
                             static_cast<double>(n) / divisor_for(n, divisor));
  const Var std = tape.sqrt(tape.add_scalar(var, epsilon));
  const Var hinge = tape.relu(tape.add_scalar(tape.scale(std, -1.0), threshold));
  return tape.mean(hinge);
}

Var vicreg_covariance_loss(Tape& tape, Var h, CovDivisor divisor) {
  require_samples(tape.value(h).rows(), "vicreg_covariance_loss");
  return tape.frob_sq(tape.offdiag(taped_covariance(tape, h, divisor)));
}

Var or_loss(Tape& tape, std::span<const Var> weights, const RegularizerConfig& cfg,
            std::uint64_t step) {
  if (cfg.kind != RegularizerKind::so && cfg.kind != RegularizerKind::srip) {
    throw ContractError("or_loss: regularizer kind must be so or srip");
  }
  if (weights.empty()) {
    spdlog::warn("or_loss: no linear/conv layers in encoder, OR term is 0");
    return tape.constant(Matrix(1, 1, 0.0));
  }
  Var total{};
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const Var term = cfg.kind == RegularizerKind::so
                         ? so_loss(tape, weights[i])
                         : srip_loss(tape, weights[i], srip_layer_seed(cfg.srip_seed, step, i));
    total = i == 0 ? term : tape.add(total, term);
  }
  return total;
}

}  // namespace taped

}  // namespace ortho
