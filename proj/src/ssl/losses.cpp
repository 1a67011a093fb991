#include "ortho/errors.hpp"
#include "ortho/ssl/data.hpp"
#include "ortho/ssl/objective.hpp"

namespace ortho::ssl {

using autodiff::Tape;
using autodiff::Var;

Var byol_pair_loss(Tape& tape, Var p, Var z) {
  const Var pn = tape.row_normalize(p, kCosineEps);
  const Var zn = tape.row_normalize(z, kCosineEps);
  const Var cos = tape.sum_rows(tape.mul(pn, zn));
  return tape.add_scalar(tape.scale(tape.mean(cos), -2.0), 2.0);
}

Var infonce_loss(Tape& tape, Var z1, Var z2, double temperature) {
  if (tape.value(z1).rows() < 2) {
    throw InsufficientSamplesError("infonce: batch needs at least 2 rows for negatives");
  }
  if (!(temperature > 0.0)) throw std::invalid_argument("infonce: temperature must be > 0");
  const Var n1 = tape.row_normalize(z1, kCosineEps);
  const Var n2 = tape.row_normalize(z2, kCosineEps);
  const Var logits = tape.scale(tape.matmul(n1, tape.transpose(n2)), 1.0 / temperature);
  const Var forward = tape.xent_diag(logits);
  const Var backward = tape.xent_diag(tape.transpose(logits));
  return tape.scale(tape.add(forward, backward), 0.5);
}

namespace {

Var whitening_terms(Tape& tape, Var a, Var b, const RegularizerConfig& rc) {
  const auto var_a = taped::vicreg_variance_loss(tape, a, rc.vicreg_threshold, rc.vicreg_epsilon,
                                                 rc.cov_divisor);
  const auto var_b = taped::vicreg_variance_loss(tape, b, rc.vicreg_threshold, rc.vicreg_epsilon,
                                                 rc.cov_divisor);
  const auto cov_a = taped::vicreg_covariance_loss(tape, a, rc.cov_divisor);
  const auto cov_b = taped::vicreg_covariance_loss(tape, b, rc.cov_divisor);
  const Var variance = tape.scale(tape.add(var_a, var_b), 0.5 * rc.vicreg_gamma);
  const Var covariance =
      tape.scale(tape.add(cov_a, cov_b), 0.5 * rc.vicreg_gamma * kVicregCovarianceRatio);
  return tape.add(variance, covariance);
}

}  // namespace

RecordedObjective record_objective(Tape& tape, const DualNetState& state, const Matrix& view1,
                                   const Matrix& view2, const TrainConfig& cfg, std::uint64_t step,
                                   ObjectiveParts parts) {
  RecordedObjective rec;
  const Activation act = state.activation;
  const bool byol = cfg.method == Method::byol;
  rec.encoder = register_net(tape, state.encoder, true);
  rec.projector = register_net(tape, state.projector, true);
  if (byol) {
    rec.predictor = register_net(tape, state.predictor, true);
    rec.target_encoder = register_net(tape, state.target_encoder, false);
    rec.target_projector = register_net(tape, state.target_projector, false);
  }

  const Var x1 = tape.constant(view1);
  const Var x2 = tape.constant(view2);
  auto embed = [&](Var x) {
    const Var h = forward(tape, state.encoder, rec.encoder, x, act);
    return state.projector.empty() ? h : forward(tape, state.projector, rec.projector, h, act);
  };
  const Var z1 = embed(x1);
  const Var z2 = embed(x2);

  Var ssl{};
  Var whiten_a = z1, whiten_b = z2;
  if (byol) {
    const Var p1 = forward(tape, state.predictor, rec.predictor, z1, act);
    const Var p2 = forward(tape, state.predictor, rec.predictor, z2, act);
    auto target_embed = [&](Var x) {
      const Var h = forward(tape, state.target_encoder, rec.target_encoder, x, act);
      return state.target_projector.empty()
                 ? h
                 : forward(tape, state.target_projector, rec.target_projector, h, act);
    };
    const Var t1 = target_embed(x1);
    const Var t2 = target_embed(x2);
    ssl = tape.scale(tape.add(byol_pair_loss(tape, p1, t2), byol_pair_loss(tape, p2, t1)), 0.5);
    if (cfg.whiten_target == WhitenTarget::predictor) {
      whiten_a = p1;
      whiten_b = p2;
    }
  } else {
    ssl = infonce_loss(tape, z1, z2, cfg.temperature);
  }

  if (parts.whitening) {
    const Var w = whitening_terms(tape, whiten_a, whiten_b, cfg.regularizer);
    rec.whitening = w;
    ssl = tape.add(ssl, w);
  }
  rec.ssl = ssl;
  rec.total = ssl;
  if (parts.orthogonality) {
    std::vector<Var> eligible;
    for (std::size_t i = 0; i < state.encoder.layers.size(); ++i) {
      const LayerKind k = state.encoder.layers[i].kind;
      if (k == LayerKind::linear || k == LayerKind::conv) eligible.push_back(rec.encoder.weights[i]);
    }
    const Var or_sum = taped::or_loss(tape, eligible, cfg.regularizer, step);
    rec.orthogonality = or_sum;
    rec.total = tape.add(ssl, tape.scale(or_sum, cfg.or_gamma()));
  }
  return rec;
}

namespace {

void collect(const Tape& tape, const Net& net, const NetVars& vars, std::vector<Matrix>& out) {
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    if (i < vars.weights.size()) {
      out.push_back(tape.grad(vars.weights[i]));
      out.push_back(tape.grad(vars.biases[i]));
    } else {
      // net not used by this method (InfoNCE has no predictor)
      out.emplace_back(net.layers[i].weight.rows(), net.layers[i].weight.cols());
      out.emplace_back(net.layers[i].bias.rows(), net.layers[i].bias.cols());
    }
  }
}

}  // namespace

StepResult evaluate_objective(const DualNetState& state, const Matrix& view1, const Matrix& view2,
                              const TrainConfig& cfg, std::uint64_t step, ObjectiveParts parts) {
  Tape tape;
  const RecordedObjective rec = record_objective(tape, state, view1, view2, cfg, step, parts);
  tape.backward(rec.total);
  StepResult r;
  r.loss_ssl = tape.scalar(rec.ssl);
  if (rec.whitening) r.loss_whiten = tape.scalar(*rec.whitening);
  if (rec.orthogonality) r.loss_or = tape.scalar(*rec.orthogonality);
  r.combined = tape.scalar(rec.total);
  collect(tape, state.encoder, rec.encoder, r.grads);
  collect(tape, state.projector, rec.projector, r.grads);
  collect(tape, state.predictor, rec.predictor, r.grads);
  return r;
}

StepResult byol_step(const DualNetState& state, const Matrix& batch, const TrainConfig& cfg,
                     Rng& rng) {
  TrainConfig c = cfg;
  c.method = Method::byol;
  const Matrix v1 = augment(batch, cfg.augmentation, rng);
  const Matrix v2 = augment(batch, cfg.augmentation, rng);
  return evaluate_objective(state, v1, v2, c, 0, {});
}

StepResult infonce_step(const DualNetState& state, const Matrix& batch, const TrainConfig& cfg,
                        Rng& rng) {
  if (batch.rows() < 2) {
    throw InsufficientSamplesError("infonce_step: batch_size must be >= 2");
  }
  TrainConfig c = cfg;
  c.method = Method::infonce;
  const Matrix v1 = augment(batch, cfg.augmentation, rng);
  const Matrix v2 = augment(batch, cfg.augmentation, rng);
  return evaluate_objective(state, v1, v2, c, 0, {});
}

}  // namespace ortho::ssl
