#pragma once

#include <cstdint>
#include <vector>

#include "ortho/matrix.hpp"
#include "ortho/ssl/config.hpp"

namespace ortho::ssl {

struct ProbeResult {
  double accuracy = 0.0;  // on the held-out 20%
  double train_accuracy = 0.0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
};

/// Multinomial logistic regression on frozen features, fitted by full-batch
/// gradient descent on the standardized 80% split. Needs >= 2 classes.
ProbeResult linear_probe(const Matrix& repr, const std::vector<int>& labels,
                         const ProbeConfig& cfg, std::uint64_t split_seed);

}  // namespace ortho::ssl
