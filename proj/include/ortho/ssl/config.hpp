#pragma once

#include <cstdint>
#include <optional>

#include "ortho/regularizers.hpp"
#include "ortho/spectra.hpp"

namespace ortho::ssl {

enum class Method { byol, infonce };
enum class Activation { tanh, relu };
enum class WhitenTarget { predictor, projector };
/// Where an unset regularizer.gamma comes from.
enum class GammaPreset { toy, recipe };

struct DataConfig {
  std::size_t n_samples = 5000;
  std::size_t dim = 20;
  std::size_t n_clusters = 4;
  double cluster_std = 1.0;
};

struct AugmentConfig {
  double noise_std = 0.5;
  double mask_prob = 0.2;
};

struct Dims {
  std::size_t hidden = 64;
  std::size_t repr = 32;
  std::optional<std::size_t> proj = 32;  // nullopt: no projector, loss on representations
};

/// Optional leading conv block: valid padding, stride 1, then flatten.
/// Input rows are read as (in_channels, height, width) images.
struct ConvConfig {
  bool enabled = false;
  std::size_t in_channels = 1;
  std::size_t height = 4;
  std::size_t width = 5;
  std::size_t out_channels = 4;
  std::size_t kernel_h = 3;
  std::size_t kernel_w = 3;
};

struct ProbeConfig {
  std::size_t epochs = 300;
  double lr = 0.5;
};

struct TrainConfig {
  std::uint64_t seed = 0;
  Method method = Method::byol;
  RegularizerConfig regularizer;
  GammaPreset gamma_preset = GammaPreset::toy;
  WhitenTarget whiten_target = WhitenTarget::predictor;
  DataConfig data;
  AugmentConfig augmentation;
  Dims dims;
  ConvConfig conv;
  std::size_t epochs = 200;
  std::size_t batch_size = 256;
  double lr = 0.05;
  double ema_tau = 0.99;
  double temperature = 0.5;
  Activation activation = Activation::tanh;
  ProbeConfig probe;
  CollapseOptions spectra;

  /// Weight on the OR term; 0 unless the regularizer is so or srip.
  double or_gamma() const noexcept;
  /// Throws std::invalid_argument naming the first bad field.
  void validate() const;
};

/// gamma used at desk scale when regularizer.gamma is unset.
double toy_gamma(RegularizerKind kind) noexcept;

}  // namespace ortho::ssl
