#include "ortho/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "ortho/errors.hpp"

namespace ortho {

namespace {

constexpr double kOrthogonalTol = 1e-10;
constexpr double kNormRelTol = 1e-9;

NormCheck squared_norm_check(const Matrix& w, const Matrix& in, const Matrix& right) {
  NormCheck r;
  if (!w.is_square()) {
    r.note = "not applicable: W is " + w.shape_string() + ", norm preservation needs square W";
    return r;
  }
  if (in.cols() != right.rows()) {
    r.note = "shape mismatch: " + in.shape_string() + " vs W " + w.shape_string();
    return r;
  }
  r.applicable = true;
  r.orthogonal = max_abs(sub_identity(matmul(transpose(w), w))) <= kOrthogonalTol;
  if (!r.orthogonal) r.note = "W^T W != I; equality not expected";

  const Matrix out = matmul(in, right);
  r.transformed_sq = frobenius_sq(out);
  r.original_sq = frobenius_sq(in);
  r.relative_gap = r.original_sq > 0.0
                       ? std::abs(r.transformed_sq - r.original_sq) / r.original_sq
                       : std::abs(r.transformed_sq);
  for (std::size_t j = 0; j < in.cols(); ++j) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < in.rows(); ++i) {
      num += out(i, j) * out(i, j);
      den += in(i, j) * in(i, j);
    }
    r.coordinate_ratios.push_back(den > 0.0 ? num / den : 0.0);
  }
  r.passed = r.orthogonal && r.relative_gap <= kNormRelTol;
  return r;
}

}  // namespace

Eigenspectrum spectrum_from_eigenvalues(std::string source, std::vector<double> raw) {
  std::stable_sort(raw.begin(), raw.end(), std::greater<>());
  Eigenspectrum s;
  s.source = std::move(source);
  s.dim = raw.size();
  s.nonpositive_count =
      static_cast<std::size_t>(std::count_if(raw.begin(), raw.end(), [](double v) { return v <= 0.0; }));
  s.normalized.assign(raw.size(), 0.0);
  if (raw.empty() || raw.front() <= kDegenerateEigenvalue) {
    s.degenerate = true;
  } else {
    for (std::size_t i = 0; i < raw.size(); ++i) s.normalized[i] = raw[i] / raw.front();
  }
  s.raw = std::move(raw);
  return s;
}

Eigenspectrum normalized_eigenvalues(const Matrix& t, std::string source, CovDivisor divisor) {
  const Eigensystem es = sym_eig(covariance(t, divisor));
  return spectrum_from_eigenvalues(std::move(source), es.eigenvalues);
}

double effective_rank(const Eigenspectrum& spec) {
  double total = 0.0;
  for (double v : spec.raw) total += std::max(v, 0.0);
  if (!(total > 0.0)) throw std::domain_error("effective_rank: no positive eigenvalue");
  double entropy = 0.0;
  for (double v : spec.raw) {
    if (v <= 0.0) continue;
    const double p = v / total;
    entropy -= p * std::log(p);
  }
  return std::clamp(std::exp(entropy), 1.0, static_cast<double>(spec.dim));
}

std::optional<std::size_t> decay_index(const Eigenspectrum& spec, double threshold) {
  for (std::size_t i = 0; i < spec.normalized.size(); ++i) {
    if (spec.normalized[i] < threshold) return i;
  }
  return std::nullopt;
}

Matrix correlation_matrix(const Matrix& w, std::vector<std::size_t>* zero_variance) {
  if (w.rows() < 2) {
    throw InsufficientSamplesError("correlation_matrix needs at least 2 rows, got " +
                                   std::to_string(w.rows()));
  }
  const Matrix cov = covariance(w);
  const std::size_t n = cov.rows();
  std::vector<double> sd(n);
  std::vector<std::size_t> flat;
  for (std::size_t j = 0; j < n; ++j) {
    sd[j] = std::sqrt(std::max(cov(j, j), 0.0));
    if (!(sd[j] > 0.0)) flat.push_back(j);
  }
  if (!flat.empty()) {
    spdlog::warn("correlation_matrix: {} zero-variance column(s), reported as 0", flat.size());
  }
  Matrix corr(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!(sd[i] > 0.0) || !(sd[j] > 0.0)) continue;
      corr(i, j) = i == j ? 1.0 : std::min(1.0, std::abs(cov(i, j)) / (sd[i] * sd[j]));
    }
  }
  if (zero_variance) *zero_variance = std::move(flat);
  return corr;
}

const StageSummary* CollapseReport::find(std::string_view source) const {
  for (const auto& s : stages) {
    if (s.spectrum.source == source) return &s;
  }
  return nullptr;
}

namespace {

StageSummary summarize(StageKind kind, const std::string& name, const Matrix& samples,
                       const CollapseOptions& opt) {
  StageSummary st;
  st.kind = kind;
  st.spectrum.source = name;
  try {
    st.spectrum = normalized_eigenvalues(samples, name, opt.divisor);
    if (st.spectrum.nonpositive_count < st.spectrum.dim) {
      st.effective_rank = effective_rank(st.spectrum);
    }
    st.decay_hi_index = decay_index(st.spectrum, opt.decay_hi);
    st.decay_lo_index = decay_index(st.spectrum, opt.decay_lo);
  } catch (const std::exception& e) {
    st.error = e.what();
    st.spectrum.degenerate = true;
  }
  return st;
}

}  // namespace

CollapseReport collapse_report(std::span<const LayerSpec> layers,
                               std::span<const FeatureStage> features,
                               const CollapseOptions& options) {
  CollapseReport report;
  report.decay_hi = options.decay_hi;
  report.decay_lo = options.decay_lo;
  for (const auto& layer : layers) {
    const Matrix samples =
        options.weight_axis == WeightAxis::rows ? layer.weight : transpose(layer.weight);
    report.stages.push_back(summarize(StageKind::weight, layer.name, samples, options));
  }
  for (const auto& [name, m] : features) {
    report.stages.push_back(summarize(StageKind::feature, name, m, options));
  }
  return report;
}

WhiteningCheck prop1_whitening_check(const Matrix& w, const Matrix& x, double tol) {
  WhiteningCheck r;
  if (x.cols() != w.rows()) {
    r.note = "shape mismatch: X " + x.shape_string() + " vs W " + w.shape_string();
    return r;
  }
  if (x.rows() < 2) {
    r.note = "X needs at least 2 rows";
    return r;
  }
  const Matrix cov_x = covariance(x);
  r.sigma2 = trace(cov_x) / static_cast<double>(cov_x.rows());
  const double scale_tol = tol * std::max(1.0, r.sigma2);

  r.w_orthogonality_error = max_abs(sub_identity(matmul(transpose(w), w)));
  const Matrix sigma_i = scale(Matrix::identity(cov_x.rows()), r.sigma2);
  r.x_whitening_error = std::max(max_abs(column_means(x)), frobenius(sub(cov_x, sigma_i)));
  const bool w_ok = r.w_orthogonality_error <= tol;
  const bool x_ok = r.x_whitening_error <= scale_tol;
  r.preconditions_ok = w_ok && x_ok;
  if (!w_ok) r.note += "W columns not orthonormal; ";
  if (!x_ok) r.note += "X not whitened; ";

  const Matrix s = matmul(x, w);
  r.max_abs_mean = max_abs(column_means(s));
  r.cov_s = covariance(s);
  r.cov_deviation =
      frobenius(sub(r.cov_s, scale(Matrix::identity(r.cov_s.rows()), r.sigma2)));
  r.passed = r.preconditions_ok && r.max_abs_mean <= tol && r.cov_deviation <= scale_tol;
  return r;
}

NormCheck prop1_norm_check(const Matrix& w, const Matrix& x) {
  return squared_norm_check(w, x, w);
}

NormCheck prop1_gradnorm_check(const Matrix& w, const Matrix& g) {
  // dL/dX = dL/dS * W^T
  return squared_norm_check(w, g, transpose(w));
}

}  // namespace ortho
