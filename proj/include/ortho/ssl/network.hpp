#pragma once

#include <string>
#include <vector>

#include "ortho/io.hpp"
#include "ortho/rng.hpp"
#include "ortho/ssl/config.hpp"
#include "ortho/tape.hpp"

namespace ortho::ssl {

/// Linear (input x output weight) or conv layer plus bias and an optional
/// activation after it. Conv weights are stored reshaped, (S*H*C_in) x C_out.
struct Layer {
  std::string name;
  LayerKind kind = LayerKind::linear;
  Matrix weight;
  Matrix bias;  // 1 x output
  bool activate = true;
  io::ConvShape conv;         // conv only
  std::size_t in_height = 0;  // conv only: input image size
  std::size_t in_width = 0;

  std::size_t output_width() const noexcept;
  LayerSpec spec() const;
};

/// A stack of layers applied in order.
struct Net {
  std::vector<Layer> layers;

  bool empty() const noexcept { return layers.empty(); }
  std::size_t output_width() const;
  std::vector<LayerSpec> specs() const;
};

/// Online encoder/projector/predictor plus a target encoder/projector that
/// is only ever updated by EMA.
struct DualNetState {
  Net encoder;
  Net projector;  // empty when dims.proj is unset
  Net predictor;
  Net target_encoder;
  Net target_projector;
  double ema_tau = 0.99;
  Activation activation = Activation::tanh;
};

Net make_encoder(const TrainConfig& cfg, Rng& rng, const std::string& prefix = "encoder");
/// linear-activation-linear
Net make_mlp2(const std::string& prefix, std::size_t in, std::size_t hidden, std::size_t out,
              Rng& rng);
DualNetState make_dual_state(const TrainConfig& cfg, Rng& online_rng, Rng& target_rng);

/// Tape handles of a net's parameters, in layer order.
struct NetVars {
  std::vector<autodiff::Var> weights;
  std::vector<autodiff::Var> biases;
};

/// Put a net's weights and biases on the tape, as parameters when
/// `trainable`, otherwise as constants.
NetVars register_net(autodiff::Tape& tape, const Net& net, bool trainable);

/// Record net(x) using previously registered handles. `block_outputs`, if
/// given, receives each layer's output.
autodiff::Var forward(autodiff::Tape& tape, const Net& net, const NetVars& vars, autodiff::Var x,
                      Activation act, std::vector<autodiff::Var>* block_outputs = nullptr);

/// Plain evaluation; returns every layer's output in order.
std::vector<Matrix> forward_stages(const Net& net, const Matrix& x, Activation act);
Matrix forward_plain(const Net& net, const Matrix& x, Activation act);

/// Parameter matrices of the online networks in a fixed order
/// (encoder, projector, predictor; weight then bias per layer).
std::vector<Matrix*> online_parameters(DualNetState& state);
std::vector<const Matrix*> online_parameters(const DualNetState& state);

/// target <- tau * target + (1 - tau) * online, parameter-wise.
void ema_update(DualNetState& state);

}  // namespace ortho::ssl
