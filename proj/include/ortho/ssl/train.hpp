#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include "ortho/spectra.hpp"
#include "ortho/ssl/config.hpp"
#include "ortho/ssl/data.hpp"
#include "ortho/ssl/network.hpp"

namespace ortho::ssl {

struct StepLog {
  std::size_t step = 0;
  double loss_ssl = 0.0;     // includes whitening terms when enabled
  double loss_whiten = 0.0;
  double loss_or = 0.0;      // unweighted; 0 when the OR term is off
  double combined = 0.0;     // loss_ssl + gamma * loss_or

  friend bool operator==(const StepLog&, const StepLog&) = default;
};

struct EpochLog {
  std::size_t epoch = 0;
  double loss_ssl = 0.0;  // means over the epoch's steps
  double loss_whiten = 0.0;
  double loss_or = 0.0;
  double combined = 0.0;
  std::optional<double> effective_rank;  // representations of the held-out batch

  friend bool operator==(const EpochLog&, const EpochLog&) = default;
};

struct TrainLog {
  double gamma = 0.0;  // weight actually applied to loss_or
  std::vector<StepLog> steps;
  std::vector<EpochLog> epochs;
  bool diverged = false;
  std::string divergence;  // what went non-finite, and where
  CollapseReport final_report;
  std::optional<double> deepest_weight_effective_rank;
  std::optional<double> representation_effective_rank;
  std::optional<double> probe_accuracy;

  friend bool operator==(const TrainLog&, const TrainLog&) = default;
};

struct TrainResult {
  TrainLog log;
  DualNetState state;  // last state with a finite loss
};

/// Stream ids fed to derive_seed(cfg.seed, id).
enum SeedStream : std::uint64_t {
  kSeedData = 1,
  kSeedInit = 2,
  kSeedTargetInit = 3,
  kSeedBatches = 4,
  kSeedProbe = 5,
};

/// Full run. Never throws on divergence: the log stops at the last finite
/// step and `diverged` is set.
TrainResult train(const TrainConfig& cfg);

/// Stage name of the encoder output in the final report.
inline constexpr const char* kRepresentationStage = "representations";

/// Encoder layers with weights, in order (what gets checkpointed).
std::vector<LayerSpec> encoder_specs(const DualNetState& state);

nlohmann::json train_log_to_json(const TrainLog& log);
TrainLog train_log_from_json(const nlohmann::json& j);

}  // namespace ortho::ssl
