#pragma once

// Per-step objectives of the joint-embedding harness.
//
// BYOL-lite: online predictor(projector(encoder(view))) regresses the
// target projector(encoder(other view)) with 2 - 2 cos, symmetrized over
// the view swap. InfoNCE-lite: cosine-similarity logits / temperature,
// cross-entropy with positives on the diagonal, averaged over both
// directions. The target network enters the tape as constants only.

#include <optional>
#include <vector>

#include "ortho/rng.hpp"
#include "ortho/ssl/config.hpp"
#include "ortho/ssl/network.hpp"
#include "ortho/tape.hpp"

namespace ortho::ssl {

/// Added to vector norms inside every cosine.
constexpr double kCosineEps = 1e-12;

struct ObjectiveParts {
  bool whitening = false;     // VICReg variance/covariance terms
  bool orthogonality = false;  // gamma * sum OR(W) over encoder weights
};

struct RecordedObjective {
  autodiff::Var ssl;                      // SSL loss, whitening terms included
  std::optional<autodiff::Var> whitening;  // whitening part of ssl
  std::optional<autodiff::Var> orthogonality;  // unweighted OR sum
  autodiff::Var total;
  NetVars encoder, projector, predictor;           // parameters
  NetVars target_encoder, target_projector;        // constants
};

RecordedObjective record_objective(autodiff::Tape& tape, const DualNetState& state,
                                   const Matrix& view1, const Matrix& view2,
                                   const TrainConfig& cfg, std::uint64_t step,
                                   ObjectiveParts parts);

struct StepResult {
  double loss_ssl = 0.0;
  double loss_whiten = 0.0;
  double loss_or = 0.0;
  double combined = 0.0;
  std::vector<Matrix> grads;  // aligned with online_parameters(state)
};

/// Record, differentiate, and collect gradients for the given views.
StepResult evaluate_objective(const DualNetState& state, const Matrix& view1, const Matrix& view2,
                              const TrainConfig& cfg, std::uint64_t step, ObjectiveParts parts);

/// BYOL-lite loss and online gradients on two fresh augmentations of batch.
StepResult byol_step(const DualNetState& state, const Matrix& batch, const TrainConfig& cfg,
                     Rng& rng);
/// InfoNCE-lite loss and gradients (encoder + projector) on two fresh views.
/// Needs at least 2 rows.
StepResult infonce_step(const DualNetState& state, const Matrix& batch, const TrainConfig& cfg,
                        Rng& rng);

/// mean_i (2 - 2 cos(p_i, z_i)) on the tape; z is typically a constant.
autodiff::Var byol_pair_loss(autodiff::Tape& tape, autodiff::Var p, autodiff::Var z);
/// Symmetric InfoNCE over in-batch negatives.
autodiff::Var infonce_loss(autodiff::Tape& tape, autodiff::Var z1, autodiff::Var z2,
                           double temperature);

}  // namespace ortho::ssl
