#include "ortho/ssl/config.hpp"

#include <stdexcept>
#include <string>

namespace ortho::ssl {

double toy_gamma(RegularizerKind kind) noexcept {
  switch (kind) {
    case RegularizerKind::so: return 1e-3;
    case RegularizerKind::srip: return 1e-2;
    default: return 0.0;
  }
}

double TrainConfig::or_gamma() const noexcept {
  if (regularizer.kind != RegularizerKind::so && regularizer.kind != RegularizerKind::srip) {
    return 0.0;
  }
  if (regularizer.gamma) return *regularizer.gamma;
  return gamma_preset == GammaPreset::toy ? toy_gamma(regularizer.kind)
                                          : recipe_gamma(regularizer.kind);
}

namespace {

void require(bool ok, const char* field, const std::string& why) {
  if (!ok) throw std::invalid_argument(std::string(field) + ": " + why);
}

}  // namespace

void TrainConfig::validate() const {
  require(data.n_samples > 0, "data.n_samples", "must be positive");
  require(data.dim > 0, "data.dim", "must be positive");
  require(data.n_clusters >= 2, "data.n_clusters", "must be >= 2");
  require(data.cluster_std >= 0.0, "data.cluster_std", "must be >= 0");
  require(augmentation.noise_std >= 0.0, "augmentation.noise_std", "must be >= 0");
  require(augmentation.mask_prob >= 0.0 && augmentation.mask_prob <= 1.0,
          "augmentation.mask_prob", "must be in [0, 1]");
  require(dims.hidden > 0, "dims.hidden", "must be positive");
  require(dims.repr > 0, "dims.repr", "must be positive");
  require(!dims.proj || *dims.proj > 0, "dims.proj", "must be positive or none");
  require(epochs > 0, "epochs", "must be positive");
  require(batch_size >= 2, "batch_size", "must be >= 2");
  require(batch_size <= data.n_samples, "batch_size", "must not exceed data.n_samples");
  require(lr > 0.0, "lr", "must be positive");
  require(ema_tau >= 0.0 && ema_tau < 1.0, "ema_tau", "must be in [0, 1)");
  require(temperature > 0.0, "temperature", "must be positive");
  require(probe.epochs > 0, "probe.epochs", "must be positive");
  require(probe.lr > 0.0, "probe.lr", "must be positive");
  require(!regularizer.gamma || *regularizer.gamma >= 0.0, "regularizer.gamma", "must be >= 0");
  require(regularizer.vicreg_gamma >= 0.0, "regularizer.vicreg_gamma", "must be >= 0");
  require(regularizer.vicreg_epsilon > 0.0, "regularizer.vicreg_epsilon", "must be positive");
  require(spectra.decay_hi > 0.0 && spectra.decay_hi < 1.0, "spectra.decay_hi", "must be in (0, 1)");
  require(spectra.decay_lo > 0.0 && spectra.decay_lo < 1.0, "spectra.decay_lo", "must be in (0, 1)");
  if (conv.enabled) {
    require(conv.in_channels * conv.height * conv.width == data.dim, "conv",
            "in_channels * height * width must equal data.dim");
    require(conv.out_channels > 0, "conv.out_channels", "must be positive");
    require(conv.kernel_h >= 1 && conv.kernel_h <= conv.height, "conv.kernel_h",
            "must be in [1, height]");
    require(conv.kernel_w >= 1 && conv.kernel_w <= conv.width, "conv.kernel_w",
            "must be in [1, width]");
  }
}

}  // namespace ortho::ssl
