#include "ortho/ssl/data.hpp"

#include <cstring>
#include <stdexcept>

namespace ortho::ssl {

Dataset gen_synthetic(const DataConfig& cfg, std::uint64_t seed) {
  if (cfg.n_clusters < 2) throw std::invalid_argument("gen_synthetic: n_clusters must be >= 2");
  if (cfg.cluster_std < 0.0) throw std::invalid_argument("gen_synthetic: cluster_std must be >= 0");
  Rng rng(seed);
  Dataset d;
  d.centers = Matrix(cfg.n_clusters, cfg.dim);
  for (double& v : d.centers.data()) v = rng.uniform(-3.0, 3.0);
  d.features = Matrix(cfg.n_samples, cfg.dim);
  d.labels.resize(cfg.n_samples);
  for (std::size_t i = 0; i < cfg.n_samples; ++i) {
    const std::size_t k = i % cfg.n_clusters;
    d.labels[i] = static_cast<int>(k);
    for (std::size_t j = 0; j < cfg.dim; ++j) {
      d.features(i, j) = d.centers(k, j) + cfg.cluster_std * rng.normal();
    }
  }
  return d;
}

Matrix augment(const Matrix& x, const AugmentConfig& cfg, Rng& rng) {
  if (cfg.noise_std < 0.0) throw std::invalid_argument("augment: noise_std must be >= 0");
  if (!(cfg.mask_prob >= 0.0 && cfg.mask_prob <= 1.0)) {
    throw std::invalid_argument("augment: mask_prob must be in [0, 1]");
  }
  Matrix out = x;
  for (double& v : out.data()) {
    if (cfg.noise_std > 0.0) v += cfg.noise_std * rng.normal();
    if (cfg.mask_prob > 0.0 && rng.bernoulli(cfg.mask_prob)) v = 0.0;
  }
  return out;
}

Matrix take_rows(const Matrix& x, const std::vector<std::size_t>& rows) {
  Matrix out(rows.size(), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = x.row(rows.at(i));
    std::memcpy(out.row(i).data(), src.data(), src.size() * sizeof(double));
  }
  return out;
}

}  // namespace ortho::ssl
