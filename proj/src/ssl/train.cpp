#include "ortho/ssl/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <spdlog/spdlog.h>

#include "ortho/ssl/objective.hpp"
#include "ortho/ssl/probe.hpp"

namespace ortho::ssl {

std::vector<LayerSpec> encoder_specs(const DualNetState& state) { return state.encoder.specs(); }

namespace {

std::optional<double> try_effective_rank(const Matrix& features) {
  try {
    return effective_rank(normalized_eigenvalues(features, kRepresentationStage));
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

bool finite(const StepResult& r) {
  if (!std::isfinite(r.combined) || !std::isfinite(r.loss_ssl) || !std::isfinite(r.loss_or)) {
    return false;
  }
  return std::all_of(r.grads.begin(), r.grads.end(), [](const Matrix& g) { return g.all_finite(); });
}

}  // namespace

TrainResult train(const TrainConfig& cfg) {
  cfg.validate();
  const Dataset data = gen_synthetic(cfg.data, derive_seed(cfg.seed, kSeedData));
  Rng init_rng(derive_seed(cfg.seed, kSeedInit));
  Rng target_rng(derive_seed(cfg.seed, kSeedTargetInit));
  Rng batch_rng(derive_seed(cfg.seed, kSeedBatches));

  TrainResult result;
  DualNetState& state = result.state;
  state = make_dual_state(cfg, init_rng, target_rng);
  TrainLog& log = result.log;

  const RegularizerKind kind = cfg.regularizer.kind;
  ObjectiveParts parts;
  parts.whitening = kind == RegularizerKind::vicreg_whiten;
  parts.orthogonality =
      (kind == RegularizerKind::so || kind == RegularizerKind::srip) && cfg.or_gamma() > 0.0;
  log.gamma = parts.orthogonality ? cfg.or_gamma() : 0.0;

  std::vector<std::size_t> first(cfg.batch_size);
  std::iota(first.begin(), first.end(), 0);
  const Matrix eval_batch = take_rows(data.features, first);

  const std::size_t n = cfg.data.n_samples;
  const std::size_t steps_per_epoch = n / cfg.batch_size;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::size_t> idx(cfg.batch_size);
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs && !log.diverged; ++epoch) {
    std::shuffle(order.begin(), order.end(), batch_rng.engine());
    EpochLog e;
    e.epoch = epoch;
    std::size_t done = 0;
    for (std::size_t s = 0; s < steps_per_epoch; ++s, ++step) {
      std::copy_n(order.begin() + static_cast<std::ptrdiff_t>(s * cfg.batch_size), cfg.batch_size,
                  idx.begin());
      const Matrix batch = take_rows(data.features, idx);
      const Matrix v1 = augment(batch, cfg.augmentation, batch_rng);
      const Matrix v2 = augment(batch, cfg.augmentation, batch_rng);
      const StepResult r = evaluate_objective(state, v1, v2, cfg, step, parts);
      if (!finite(r)) {
        log.diverged = true;
        log.divergence = "non-finite loss or gradient at epoch " + std::to_string(epoch) +
                         ", step " + std::to_string(step);
        spdlog::error("train: {}", log.divergence);
        break;
      }
      log.steps.push_back({step, r.loss_ssl, r.loss_whiten, r.loss_or, r.combined});
      e.loss_ssl += r.loss_ssl;
      e.loss_whiten += r.loss_whiten;
      e.loss_or += r.loss_or;
      ++done;

      const std::vector<Matrix*> params = online_parameters(state);
      for (std::size_t i = 0; i < params.size(); ++i) axpy_inplace(*params[i], -cfg.lr, r.grads[i]);
      if (cfg.method == Method::byol) ema_update(state);
    }
    if (done == 0) break;
    const double inv = 1.0 / static_cast<double>(done);
    e.loss_ssl *= inv;
    e.loss_whiten *= inv;
    e.loss_or *= inv;
    e.combined = combined_loss(e.loss_ssl, e.loss_or, log.gamma);
    e.effective_rank = try_effective_rank(forward_plain(state.encoder, eval_batch, cfg.activation));
    log.epochs.push_back(e);
    if (done < steps_per_epoch) break;
  }

  // A diverging step never reaches the update, so `state` is the last good one.
  std::vector<FeatureStage> features;
  features.emplace_back("input", eval_batch);
  const std::vector<Matrix> stages = forward_stages(state.encoder, eval_batch, cfg.activation);
  for (std::size_t i = 0; i + 1 < stages.size(); ++i) {
    features.emplace_back("hidden." + std::to_string(i), stages[i]);
  }
  features.emplace_back(kRepresentationStage, stages.back());
  const std::vector<LayerSpec> specs = encoder_specs(state);
  log.final_report = collapse_report(specs, features, cfg.spectra);
  if (const auto* s = log.final_report.find(specs.back().name)) {
    log.deepest_weight_effective_rank = s->effective_rank;
  }
  if (const auto* s = log.final_report.find(kRepresentationStage)) {
    log.representation_effective_rank = s->effective_rank;
  }
  if (!log.diverged) {
    const Matrix repr = forward_plain(state.encoder, data.features, cfg.activation);
    if (repr.all_finite()) {
      log.probe_accuracy =
          linear_probe(repr, data.labels, cfg.probe, derive_seed(cfg.seed, kSeedProbe)).accuracy;
    }
  }
  return result;
}

}  // namespace ortho::ssl
