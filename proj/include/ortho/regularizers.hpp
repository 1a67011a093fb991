#pragma once

// Orthogonality regularizers (soft orthogonality and spectral-norm SRIP),
// VICReg-style variance/covariance whitening terms, and the combined
// objective  loss = loss_ssl + gamma * sum_{W in encoder} OR(W).
//
// Weight matrices are input x output. Both regularizers compare W^T W
// against I when input > output and W W^T against I otherwise.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ortho/linalg.hpp"
#include "ortho/matrix.hpp"
#include "ortho/tape.hpp"

namespace ortho {

enum class LayerKind { linear, conv, bias, norm };

std::string_view to_string(LayerKind kind) noexcept;
LayerKind layer_kind_from_string(std::string_view s);

/// A named weight plus the layout it came from. For conv layers `weight`
/// is already reshaped to (S*H*C_in) x C_out and raw_shape is
/// {C_out, C_in, H, S}; for linear layers raw_shape is {input, output}.
struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::linear;
  std::vector<std::size_t> raw_shape;
  Matrix weight;

  bool or_eligible() const noexcept { return kind == LayerKind::linear || kind == LayerKind::conv; }
};

enum class RegularizerKind { none, so, srip, vicreg_whiten };

std::string_view to_string(RegularizerKind kind) noexcept;
RegularizerKind regularizer_kind_from_string(std::string_view s);

/// Recipe values for ResNet-scale backbones: SO 1e-6, SRIP 1e-3.
double recipe_gamma(RegularizerKind kind) noexcept;

struct RegularizerConfig {
  RegularizerKind kind = RegularizerKind::none;
  std::optional<double> gamma;  // unset: recipe_gamma(kind)
  std::uint64_t srip_seed = 0;
  double vicreg_gamma = 1e-3;  // covariance term weighted vicreg_gamma * 0.004
  double vicreg_threshold = 1.0;
  double vicreg_epsilon = 1e-4;
  CovDivisor cov_divisor = CovDivisor::n_minus_1;

  double resolved_gamma() const noexcept { return gamma.value_or(recipe_gamma(kind)); }
};

constexpr double kVicregCovarianceRatio = 0.004;

double so_loss(const Matrix& w);
/// Closed form: 4 W (W^T W - I) if rows > cols, else 4 (W W^T - I) W.
Matrix so_grad(const Matrix& w);

/// Two-step power-iteration estimate of sigma(W^T W - I) (or W W^T - I),
/// with v0 ~ N(0, I) drawn from `seed`. Zero for orthogonal W.
double srip_loss(const Matrix& w, std::uint64_t seed);
/// Gradient of the estimator with v0 held fixed. Zero in the degenerate
/// branch where ||u|| < 1e-12.
Matrix srip_grad(const Matrix& w, std::uint64_t seed);

/// v0 seed for one layer at one training step.
std::uint64_t srip_layer_seed(std::uint64_t stream, std::uint64_t step,
                              std::size_t layer) noexcept;

/// Sum of SO or SRIP over the OR-eligible layers. SRIP layer i uses
/// srip_layer_seed(cfg.srip_seed, step, i) where i counts eligible layers.
/// cfg.kind must be so or srip.
double or_loss(std::span<const LayerSpec> encoder, const RegularizerConfig& cfg,
               std::uint64_t step = 0);

double combined_loss(double loss_ssl, double loss_or, double gamma);

/// (1/D) sum_d max(0, threshold - sqrt(Var(h_d) + epsilon)).
double vicreg_variance_loss(const Matrix& h, double threshold, double epsilon,
                            CovDivisor divisor = CovDivisor::n_minus_1);
/// sum_{i != j} Cov(h_i, h_j)^2.
double vicreg_covariance_loss(const Matrix& h, CovDivisor divisor = CovDivisor::n_minus_1);

// Differentiable versions recorded on a tape.
namespace taped {

autodiff::Var so_loss(autodiff::Tape& tape, autodiff::Var w);
autodiff::Var srip_loss(autodiff::Tape& tape, autodiff::Var w, std::uint64_t seed);
autodiff::Var vicreg_variance_loss(autodiff::Tape& tape, autodiff::Var h, double threshold,
                                   double epsilon, CovDivisor divisor = CovDivisor::n_minus_1);
autodiff::Var vicreg_covariance_loss(autodiff::Tape& tape, autodiff::Var h,
                                     CovDivisor divisor = CovDivisor::n_minus_1);
/// `weights` are the eligible encoder weights in layer order.
autodiff::Var or_loss(autodiff::Tape& tape, std::span<const autodiff::Var> weights,
                      const RegularizerConfig& cfg, std::uint64_t step);

}  // namespace taped

}  // namespace ortho
