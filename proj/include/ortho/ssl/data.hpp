#pragma once

#include <cstdint>
#include <vector>

#include "ortho/matrix.hpp"
#include "ortho/rng.hpp"
#include "ortho/ssl/config.hpp"

namespace ortho::ssl {

struct Dataset {
  Matrix features;           // n_samples x dim
  std::vector<int> labels;   // cluster index per row
  Matrix centers;            // n_clusters x dim
};

/// Gaussian mixture: centers uniform in [-3, 3]^dim, point i belongs to
/// cluster i mod n_clusters and is center + N(0, cluster_std^2).
Dataset gen_synthetic(const DataConfig& cfg, std::uint64_t seed);

/// x + N(0, noise_std^2), then each entry zeroed with probability mask_prob.
Matrix augment(const Matrix& x, const AugmentConfig& cfg, Rng& rng);

/// Rows of x at the given indices.
Matrix take_rows(const Matrix& x, const std::vector<std::size_t>& rows);

}  // namespace ortho::ssl
