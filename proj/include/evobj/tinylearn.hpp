#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "evobj/common.hpp"

namespace evobj {

enum class Activation { Identity, Tanh, Sigmoid };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

struct Matrix {
  std::uint32_t rows = 0, cols = 0;
  std::vector<double> data;  // row-major

  static Matrix zeros(std::uint32_t r, std::uint32_t c) {
    return Matrix{r, c, std::vector<double>(static_cast<std::size_t>(r) * c, 0.0)};
  }
  double& at(std::uint32_t r, std::uint32_t c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(std::uint32_t r, std::uint32_t c) const {
    return data[static_cast<std::size_t>(r) * cols + c];
  }
};

struct Layer {
  Matrix w;               // out x in
  std::vector<double> b;  // out
  Activation act = Activation::Identity;
};

struct Mlp {
  std::vector<Layer> layers;

  std::uint32_t input_dim() const { return layers.empty() ? 0 : layers.front().w.cols; }
  std::uint32_t output_dim() const { return layers.empty() ? 0 : layers.back().w.rows; }
  std::size_t param_count() const;
};

// Gradient (or moment) buffers shaped exactly like an Mlp's parameters.
struct ParamTensors {
  std::vector<Matrix> w;
  std::vector<std::vector<double>> b;

  static ParamTensors zeros_like(const Mlp& mlp);
};

// dims = {in, hidden..., out}; hidden layers are tanh, the output layer gets
// output_act. Weights init uniform in +-1/sqrt(fan_in).
Mlp make_mlp(const std::vector<std::uint32_t>& dims, Activation output_act, std::uint64_t seed);

std::vector<double> mlp_forward(const Mlp& mlp, const std::vector<double>& x);

// Per-layer activations kept for the backward pass. post[0] is the input.
struct ForwardTrace {
  std::vector<std::vector<double>> post;
};

std::vector<double> mlp_forward_trace(const Mlp& mlp, const std::vector<double>& x,
                                      ForwardTrace& trace);

// Gradient of (1/B) * sum_i loss_i, where dloss_dout[i] is the gradient of
// loss_i with respect to the network output (post-activation) on inputs[i].
// Accumulation order is fixed, so results are bit-reproducible.
ParamTensors mlp_backward(const Mlp& mlp, const std::vector<std::vector<double>>& inputs,
                          const std::vector<std::vector<double>>& dloss_dout);

// Callback variant: grad_fn(sample index, forward output) returns the loss
// gradient for that sample, saving the second forward pass.
using LossGradFn = std::function<std::vector<double>(std::size_t, const std::vector<double>&)>;
ParamTensors mlp_backward(const Mlp& mlp, const std::vector<std::vector<double>>& inputs,
                          const LossGradFn& grad_fn);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // decoupled
};

struct AdamState {
  ParamTensors m, v;
  std::uint64_t step = 0;

  static AdamState init(const Mlp& mlp) { return {ParamTensors::zeros_like(mlp), ParamTensors::zeros_like(mlp), 0}; }
};

// Adam with bias correction and decoupled weight decay.
void adam_step(Mlp& params, const ParamTensors& grads, AdamState& state, const AdamConfig& cfg);

constexpr double kProbClamp = 1e-7;

// -(y ln p + (1-y) ln(1-p)) with p clamped to [1e-7, 1-1e-7].
double bce_loss(double p, double y);

// d bce_loss / d p; zero in the clamped regions.
double bce_grad(double p, double y);

// Clipped-surrogate policy loss (to minimize):
// -min(ratio*A, clip(ratio, 1-eps, 1+eps)*A).
double ppo_loss(double ratio, double advantage, double clip_eps);

// JSON checkpoint round-trip, lossless for 64-bit doubles.
std::string mlp_to_json(const Mlp& mlp);
Mlp mlp_from_json(const std::string& text);
void save_mlp(const Mlp& mlp, const std::string& path);
Mlp load_mlp(const std::string& path);

}  // namespace evobj
