#include "ortho/ssl/network.hpp"

#include <cmath>
#include <memory>

#include "ortho/errors.hpp"
#include "ortho/linalg.hpp"

namespace ortho::ssl {

using autodiff::Tape;
using autodiff::Var;

namespace {

Layer make_linear(std::string name, std::size_t in, std::size_t out, bool activate, Rng& rng) {
  Layer l;
  l.name = std::move(name);
  l.kind = LayerKind::linear;
  l.weight = random_normal(in, out, rng, 1.0 / std::sqrt(static_cast<double>(in)));
  l.bias = Matrix(1, out);
  l.activate = activate;
  return l;
}

std::size_t conv_out_h(const Layer& l) { return l.in_height - l.conv.height + 1; }
std::size_t conv_out_w(const Layer& l) { return l.in_width - l.conv.width + 1; }

// im2col gather map: row (n, oy, ox), column conv_row_index(c, h, s).
std::shared_ptr<const std::vector<std::size_t>> patch_index(const Layer& l, std::size_t batch) {
  const auto& cs = l.conv;
  const std::size_t ho = conv_out_h(l), wo = conv_out_w(l);
  const std::size_t image = cs.in_channels * l.in_height * l.in_width;
  auto idx = std::make_shared<std::vector<std::size_t>>(batch * ho * wo * cs.fan_in());
  std::size_t t = 0;
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t oy = 0; oy < ho; ++oy) {
      for (std::size_t ox = 0; ox < wo; ++ox) {
        const std::size_t row_start = t;
        for (std::size_t c = 0; c < cs.in_channels; ++c) {
          for (std::size_t h = 0; h < cs.height; ++h) {
            for (std::size_t s = 0; s < cs.width; ++s) {
              (*idx)[row_start + io::conv_row_index(cs, c, h, s)] =
                  n * image + (c * l.in_height + oy + h) * l.in_width + ox + s;
              ++t;
            }
          }
        }
      }
    }
  }
  return idx;
}

Var activate(Tape& tape, Var x, Activation act) {
  return act == Activation::tanh ? tape.tanh(x) : tape.relu(x);
}

}  // namespace

std::size_t Layer::output_width() const noexcept {
  if (kind == LayerKind::conv) return conv.out_channels * conv_out_h(*this) * conv_out_w(*this);
  return weight.cols();
}

LayerSpec Layer::spec() const {
  LayerSpec s;
  s.name = name;
  s.kind = kind;
  s.weight = weight;
  if (kind == LayerKind::conv) {
    s.raw_shape = {conv.out_channels, conv.in_channels, conv.height, conv.width};
  } else {
    s.raw_shape = {weight.rows(), weight.cols()};
  }
  return s;
}

std::size_t Net::output_width() const {
  if (layers.empty()) throw ContractError("empty net has no output width");
  return layers.back().output_width();
}

std::vector<LayerSpec> Net::specs() const {
  std::vector<LayerSpec> out;
  out.reserve(layers.size());
  for (const auto& l : layers) out.push_back(l.spec());
  return out;
}

Net make_encoder(const TrainConfig& cfg, Rng& rng, const std::string& prefix) {
  Net net;
  std::size_t width = cfg.data.dim;
  if (cfg.conv.enabled) {
    const auto& cc = cfg.conv;
    if (cc.in_channels * cc.height * cc.width != cfg.data.dim) {
      throw std::invalid_argument("conv input shape does not match data.dim");
    }
    if (cc.kernel_h > cc.height || cc.kernel_w > cc.width) {
      throw std::invalid_argument("conv kernel larger than input image");
    }
    Layer l;
    l.name = prefix + ".conv0";
    l.kind = LayerKind::conv;
    l.conv = io::ConvShape{cc.out_channels, cc.in_channels, cc.kernel_h, cc.kernel_w};
    l.in_height = cc.height;
    l.in_width = cc.width;
    l.weight = random_normal(l.conv.fan_in(), cc.out_channels, rng,
                             1.0 / std::sqrt(static_cast<double>(l.conv.fan_in())));
    l.bias = Matrix(1, cc.out_channels);
    width = l.output_width();
    net.layers.push_back(std::move(l));
  }
  net.layers.push_back(make_linear(prefix + ".linear0", width, cfg.dims.hidden, true, rng));
  net.layers.push_back(make_linear(prefix + ".linear1", cfg.dims.hidden, cfg.dims.repr, true, rng));
  return net;
}

Net make_mlp2(const std::string& prefix, std::size_t in, std::size_t hidden, std::size_t out,
              Rng& rng) {
  Net net;
  net.layers.push_back(make_linear(prefix + ".linear0", in, hidden, true, rng));
  net.layers.push_back(make_linear(prefix + ".linear1", hidden, out, false, rng));
  return net;
}

DualNetState make_dual_state(const TrainConfig& cfg, Rng& online_rng, Rng& target_rng) {
  DualNetState s;
  s.ema_tau = cfg.ema_tau;
  s.activation = cfg.activation;
  s.encoder = make_encoder(cfg, online_rng);
  const std::size_t repr = cfg.dims.repr;
  std::size_t embed = repr;
  if (cfg.dims.proj) {
    embed = *cfg.dims.proj;
    s.projector = make_mlp2("projector", repr, cfg.dims.hidden, embed, online_rng);
  }
  s.predictor = make_mlp2("predictor", embed, cfg.dims.hidden, embed, online_rng);
  s.target_encoder = make_encoder(cfg, target_rng, "target.encoder");
  if (cfg.dims.proj) {
    s.target_projector = make_mlp2("target.projector", repr, cfg.dims.hidden, embed, target_rng);
  }
  return s;
}

NetVars register_net(Tape& tape, const Net& net, bool trainable) {
  NetVars vars;
  for (const auto& l : net.layers) {
    vars.weights.push_back(trainable ? tape.param(l.weight) : tape.constant(l.weight));
    vars.biases.push_back(trainable ? tape.param(l.bias) : tape.constant(l.bias));
  }
  return vars;
}

Var forward(Tape& tape, const Net& net, const NetVars& vars, Var x, Activation act,
            std::vector<Var>* block_outputs) {
  if (vars.weights.size() != net.layers.size() || vars.biases.size() != net.layers.size()) {
    throw ContractError("forward: handles do not match the net");
  }
  Var h = x;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const Layer& l = net.layers[i];
    const Var w = vars.weights[i];
    const Var b = vars.biases[i];
    if (l.kind == LayerKind::conv) {
      const std::size_t batch = tape.value(h).rows();
      const std::size_t positions = conv_out_h(l) * conv_out_w(l);
      if (tape.value(h).cols() != l.conv.in_channels * l.in_height * l.in_width) {
        throw DimensionError("conv layer " + l.name + ": input width mismatch");
      }
      const Var patches = tape.gather(h, batch * positions, l.conv.fan_in(), patch_index(l, batch));
      const Var y = tape.add_row(tape.matmul(patches, w), b);
      h = tape.reshape(y, batch, positions * l.conv.out_channels);
    } else {
      h = tape.add_row(tape.matmul(h, w), b);
    }
    if (l.activate) h = activate(tape, h, act);
    if (block_outputs) block_outputs->push_back(h);
  }
  return h;
}

std::vector<Matrix> forward_stages(const Net& net, const Matrix& x, Activation act) {
  Tape tape;
  std::vector<Var> outs;
  const NetVars vars = register_net(tape, net, false);
  forward(tape, net, vars, tape.constant(x), act, &outs);
  std::vector<Matrix> result;
  result.reserve(outs.size());
  for (Var v : outs) result.push_back(tape.value(v));
  return result;
}

Matrix forward_plain(const Net& net, const Matrix& x, Activation act) {
  if (net.empty()) return x;
  return forward_stages(net, x, act).back();
}

std::vector<Matrix*> online_parameters(DualNetState& state) {
  std::vector<Matrix*> out;
  for (Net* net : {&state.encoder, &state.projector, &state.predictor}) {
    for (auto& l : net->layers) {
      out.push_back(&l.weight);
      out.push_back(&l.bias);
    }
  }
  return out;
}

std::vector<const Matrix*> online_parameters(const DualNetState& state) {
  std::vector<const Matrix*> out;
  for (const Net* net : {&state.encoder, &state.projector, &state.predictor}) {
    for (const auto& l : net->layers) {
      out.push_back(&l.weight);
      out.push_back(&l.bias);
    }
  }
  return out;
}

void ema_update(DualNetState& state) {
  const double tau = state.ema_tau;
  if (!(tau >= 0.0 && tau < 1.0)) throw std::invalid_argument("ema_tau must be in [0, 1)");
  auto blend = [tau](Net& target, const Net& online) {
    if (target.layers.size() != online.layers.size()) {
      throw ContractError("ema_update: target and online nets differ in structure");
    }
    for (std::size_t i = 0; i < target.layers.size(); ++i) {
      for (auto [t, o] : {std::pair{&target.layers[i].weight, &online.layers[i].weight},
                          std::pair{&target.layers[i].bias, &online.layers[i].bias}}) {
        // t + (1 - tau) (o - t): exact copy at tau = 0, exact fixed point at o == t
        if (tau == 0.0) {
          *t = *o;
        } else {
          axpy_inplace(*t, 1.0 - tau, sub(*o, *t));
        }
      }
    }
  };
  blend(state.target_encoder, state.encoder);
  blend(state.target_projector, state.projector);
}

}  // namespace ortho::ssl
