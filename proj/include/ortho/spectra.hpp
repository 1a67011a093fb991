#pragma once

// Dimensional-collapse diagnostics built on covariance eigenspectra.
//
// A spectrum is normalized by its largest eigenvalue; fast decay of the
// normalized values means a few directions carry all the variance.

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ortho/linalg.hpp"
#include "ortho/matrix.hpp"
#include "ortho/regularizers.hpp"

namespace ortho {

/// Largest eigenvalues at or below this are treated as a degenerate spectrum.
constexpr double kDegenerateEigenvalue = 1e-15;

struct Eigenspectrum {
  std::string source;
  std::vector<double> raw;         // non-increasing
  std::vector<double> normalized;  // raw / raw[0], or all zeros if degenerate
  std::size_t nonpositive_count = 0;
  std::size_t dim = 0;
  bool degenerate = false;

  friend bool operator==(const Eigenspectrum&, const Eigenspectrum&) = default;
};

/// Covariance of t's columns (rows are samples), eigen-decomposed and normalized.
Eigenspectrum normalized_eigenvalues(const Matrix& t, std::string source = {},
                                     CovDivisor divisor = CovDivisor::n_minus_1);
/// Normalization step alone, for eigenvalues computed elsewhere (sorted here).
Eigenspectrum spectrum_from_eigenvalues(std::string source, std::vector<double> raw);

/// exp of the Shannon entropy of max(raw_i, 0) / sum_j max(raw_j, 0).
/// Throws std::domain_error when no eigenvalue is positive.
double effective_rank(const Eigenspectrum& spec);

/// First index whose normalized value is below `threshold`, if any.
std::optional<std::size_t> decay_index(const Eigenspectrum& spec, double threshold);

/// Pearson correlation between columns, in absolute value. Zero-variance
/// columns get an all-zero row and column (diagonal included) and are listed
/// in `zero_variance` when provided.
Matrix correlation_matrix(const Matrix& w, std::vector<std::size_t>* zero_variance = nullptr);

enum class WeightAxis { rows, cols };

struct CollapseOptions {
  WeightAxis weight_axis = WeightAxis::rows;  // rows of W are the samples
  double decay_hi = 1e-2;
  double decay_lo = 1e-4;
  CovDivisor divisor = CovDivisor::n_minus_1;
};

enum class StageKind { weight, feature };

struct StageSummary {
  StageKind kind = StageKind::feature;
  Eigenspectrum spectrum;
  std::optional<double> effective_rank;  // unset when no positive eigenvalue
  std::optional<std::size_t> decay_hi_index;
  std::optional<std::size_t> decay_lo_index;
  std::string error;  // non-empty if the stage could not be analyzed

  friend bool operator==(const StageSummary&, const StageSummary&) = default;
};

struct CollapseReport {
  double decay_hi = 1e-2;
  double decay_lo = 1e-4;
  std::vector<StageSummary> stages;  // weights in layer order, then features

  const StageSummary* find(std::string_view source) const;
  friend bool operator==(const CollapseReport&, const CollapseReport&) = default;
};

using FeatureStage = std::pair<std::string, Matrix>;

/// One spectrum per layer weight, then one per feature stage. Per-stage
/// failures are recorded in StageSummary::error; the report is always built.
CollapseReport collapse_report(std::span<const LayerSpec> layers,
                               std::span<const FeatureStage> features,
                               const CollapseOptions& options = {});

// Executable checks of the orthogonal-layer propagation properties.

/// S = X W with W^T W = I and X whitened (zero mean, covariance sigma^2 I)
/// should again be zero-mean with covariance sigma^2 I.
struct WhiteningCheck {
  bool preconditions_ok = false;
  std::string note;
  double sigma2 = 0.0;
  double w_orthogonality_error = 0.0;  // max |W^T W - I|
  double x_whitening_error = 0.0;      // max(max |mean X|, ||Sigma_X - sigma^2 I||_F)
  double max_abs_mean = 0.0;           // of S
  double cov_deviation = 0.0;          // ||Sigma_S - sigma^2 I||_F
  Matrix cov_s;
  bool passed = false;
};
WhiteningCheck prop1_whitening_check(const Matrix& w, const Matrix& x, double tol);

/// Squared-Frobenius preservation ||A W^(T)||_F^2 == ||A||_F^2 for square
/// orthogonal W. Used for both the forward (A = X, right factor W) and the
/// backward (A = dL/dS, right factor W^T) direction.
struct NormCheck {
  bool applicable = false;  // W square
  bool orthogonal = false;  // W^T W = I to 1e-10
  std::string note;
  double transformed_sq = 0.0;
  double original_sq = 0.0;
  double relative_gap = 0.0;
  std::vector<double> coordinate_ratios;  // per column: ||out_j||^2 / ||in_j||^2
  bool passed = false;
};
NormCheck prop1_norm_check(const Matrix& w, const Matrix& x);
NormCheck prop1_gradnorm_check(const Matrix& w, const Matrix& g);

}  // namespace ortho
