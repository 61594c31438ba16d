#include "evobj/tinylearn.hpp"

#include <cmath>
#include <fstream>

#include "evobj/rng.hpp"
#include "json.hpp"

namespace evobj {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Tanh: return "tanh";
    case Activation::Sigmoid: return "sigmoid";
  }
  return "identity";
}

Activation activation_from_string(const std::string& s) {
  if (s == "identity") return Activation::Identity;
  if (s == "tanh") return Activation::Tanh;
  if (s == "sigmoid") return Activation::Sigmoid;
  throw ParseError("unknown activation: " + s);
}

std::size_t Mlp::param_count() const {
  std::size_t n = 0;
  for (const Layer& l : layers) n += l.w.data.size() + l.b.size();
  return n;
}

ParamTensors ParamTensors::zeros_like(const Mlp& mlp) {
  ParamTensors t;
  for (const Layer& l : mlp.layers) {
    t.w.push_back(Matrix::zeros(l.w.rows, l.w.cols));
    t.b.emplace_back(l.b.size(), 0.0);
  }
  return t;
}

Mlp make_mlp(const std::vector<std::uint32_t>& dims, Activation output_act, std::uint64_t seed) {
  if (dims.size() < 2) throw InvalidArgument("make_mlp: need at least input and output dims");
  Rng rng(seed);
  Mlp mlp;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    Layer layer;
    layer.w = Matrix::zeros(dims[i + 1], dims[i]);
    layer.b.assign(dims[i + 1], 0.0);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dims[i]));
    for (double& v : layer.w.data) v = rng.uniform(-scale, scale);
    layer.act = (i + 2 == dims.size()) ? output_act : Activation::Tanh;
    mlp.layers.push_back(std::move(layer));
  }
  return mlp;
}

namespace {

double activate(Activation a, double z) {
  switch (a) {
    case Activation::Identity: return z;
    case Activation::Tanh: return std::tanh(z);
    case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-z));
  }
  return z;
}

// derivative in terms of the post-activation value
double activate_grad(Activation a, double post) {
  switch (a) {
    case Activation::Identity: return 1.0;
    case Activation::Tanh: return 1.0 - post * post;
    case Activation::Sigmoid: return post * (1.0 - post);
  }
  return 1.0;
}

}  // namespace

std::vector<double> mlp_forward_trace(const Mlp& mlp, const std::vector<double>& x,
                                      ForwardTrace& trace) {
  if (x.size() != mlp.input_dim()) throw InvalidArgument("mlp_forward: input dimension mismatch");
  trace.post.clear();
  trace.post.push_back(x);
  std::vector<double> cur = x;
  for (const Layer& l : mlp.layers) {
    std::vector<double> next(l.w.rows);
    for (std::uint32_t r = 0; r < l.w.rows; ++r) {
      double z = l.b[r];
      const double* wr = &l.w.data[static_cast<std::size_t>(r) * l.w.cols];
      for (std::uint32_t c = 0; c < l.w.cols; ++c) z += wr[c] * cur[c];
      next[r] = activate(l.act, z);
    }
    cur = std::move(next);
    trace.post.push_back(cur);
  }
  return cur;
}

std::vector<double> mlp_forward(const Mlp& mlp, const std::vector<double>& x) {
  ForwardTrace trace;
  return mlp_forward_trace(mlp, x, trace);
}

ParamTensors mlp_backward(const Mlp& mlp, const std::vector<std::vector<double>>& inputs,
                          const LossGradFn& grad_fn) {
  if (inputs.empty()) throw InvalidArgument("mlp_backward: empty batch");
  ParamTensors grads = ParamTensors::zeros_like(mlp);
  const std::size_t n_layers = mlp.layers.size();
  ForwardTrace trace;
  for (std::size_t s = 0; s < inputs.size(); ++s) {
    const std::vector<double> out = mlp_forward_trace(mlp, inputs[s], trace);
    std::vector<double> delta = grad_fn(s, out);
    if (delta.size() != mlp.output_dim())
      throw InvalidArgument("mlp_backward: output gradient dimension mismatch");
    for (std::size_t li = n_layers; li-- > 0;) {
      const Layer& l = mlp.layers[li];
      const std::vector<double>& in = trace.post[li];
      const std::vector<double>& out = trace.post[li + 1];
      // through the activation
      for (std::uint32_t r = 0; r < l.w.rows; ++r) delta[r] *= activate_grad(l.act, out[r]);
      Matrix& gw = grads.w[li];
      std::vector<double>& gb = grads.b[li];
      for (std::uint32_t r = 0; r < l.w.rows; ++r) {
        gb[r] += delta[r];
        double* gwr = &gw.data[static_cast<std::size_t>(r) * gw.cols];
        for (std::uint32_t c = 0; c < l.w.cols; ++c) gwr[c] += delta[r] * in[c];
      }
      if (li > 0) {
        std::vector<double> prev(l.w.cols, 0.0);
        for (std::uint32_t r = 0; r < l.w.rows; ++r) {
          const double* wr = &l.w.data[static_cast<std::size_t>(r) * l.w.cols];
          for (std::uint32_t c = 0; c < l.w.cols; ++c) prev[c] += wr[c] * delta[r];
        }
        delta = std::move(prev);
      }
    }
  }
  const double inv = 1.0 / static_cast<double>(inputs.size());
  for (Matrix& m : grads.w)
    for (double& v : m.data) v *= inv;
  for (auto& b : grads.b)
    for (double& v : b) v *= inv;
  return grads;
}

ParamTensors mlp_backward(const Mlp& mlp, const std::vector<std::vector<double>>& inputs,
                          const std::vector<std::vector<double>>& dloss_dout) {
  if (inputs.size() != dloss_dout.size())
    throw InvalidArgument("mlp_backward: inputs/gradients size mismatch");
  return mlp_backward(mlp, inputs,
                      [&](std::size_t s, const std::vector<double>&) { return dloss_dout[s]; });
}

void adam_step(Mlp& params, const ParamTensors& grads, AdamState& state, const AdamConfig& cfg) {
  if (grads.w.size() != params.layers.size())
    throw InvalidArgument("adam_step: gradient/parameter shape mismatch");
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  auto update = [&](double& p, double g, double& m, double& v) {
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
    const double mhat = m / bc1;
    const double vhat = v / bc2;
    p -= cfg.lr * (mhat / (std::sqrt(vhat) + cfg.eps) + cfg.weight_decay * p);
  };
  for (std::size_t li = 0; li < params.layers.size(); ++li) {
    Layer& l = params.layers[li];
    if (grads.w[li].data.size() != l.w.data.size() || grads.b[li].size() != l.b.size())
      throw InvalidArgument("adam_step: gradient/parameter shape mismatch");
    for (std::size_t i = 0; i < l.w.data.size(); ++i)
      update(l.w.data[i], grads.w[li].data[i], state.m.w[li].data[i], state.v.w[li].data[i]);
    for (std::size_t i = 0; i < l.b.size(); ++i)
      update(l.b[i], grads.b[li][i], state.m.b[li][i], state.v.b[li][i]);
  }
}

double bce_loss(double p, double y) {
  const double pc = std::min(std::max(p, kProbClamp), 1.0 - kProbClamp);
  return -(y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc));
}

double bce_grad(double p, double y) {
  if (p < kProbClamp || p > 1.0 - kProbClamp) return 0.0;
  return -y / p + (1.0 - y) / (1.0 - p);
}

double ppo_loss(double ratio, double advantage, double clip_eps) {
  if (ratio <= 0.0) throw InvalidArgument("ppo_loss: ratio must be positive");
  if (clip_eps <= 0.0 || clip_eps >= 1.0) throw InvalidArgument("ppo_loss: clip_eps out of (0,1)");
  // ratio-clipped surrogate: the effective ratio never exceeds 1 + eps, so
  // |loss| <= (1 + eps) |A| for every ratio
  const double clipped = std::min(std::max(ratio, 1.0 - clip_eps), 1.0 + clip_eps);
  return -std::min(ratio, clipped) * advantage;
}

namespace {

nlohmann::json mlp_to_json_obj(const Mlp& mlp) {
  nlohmann::json layers = nlohmann::json::array();
  nlohmann::json acts = nlohmann::json::array();
  for (const Layer& l : mlp.layers) {
    nlohmann::json w = nlohmann::json::array();
    for (std::uint32_t r = 0; r < l.w.rows; ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (std::uint32_t c = 0; c < l.w.cols; ++c) row.push_back(l.w.at(r, c));
      w.push_back(std::move(row));
    }
    layers.push_back({{"w", std::move(w)}, {"b", l.b}});
    acts.push_back(to_string(l.act));
  }
  return {{"layers", std::move(layers)}, {"activations", std::move(acts)}};
}

Mlp mlp_from_json_obj(const nlohmann::json& j) {
  Mlp mlp;
  const auto& layers = j.at("layers");
  const auto& acts = j.at("activations");
  if (layers.size() != acts.size()) throw ParseError("checkpoint: layers/activations mismatch");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    Layer l;
    const auto& w = layers[i].at("w");
    l.w.rows = static_cast<std::uint32_t>(w.size());
    l.w.cols = l.w.rows > 0 ? static_cast<std::uint32_t>(w[0].size()) : 0;
    for (const auto& row : w) {
      if (row.size() != l.w.cols) throw ParseError("checkpoint: ragged weight matrix");
      for (const auto& v : row) l.w.data.push_back(v.get<double>());
    }
    l.b = layers[i].at("b").get<std::vector<double>>();
    if (l.b.size() != l.w.rows) throw ParseError("checkpoint: bias size mismatch");
    l.act = activation_from_string(acts[i].get<std::string>());
    mlp.layers.push_back(std::move(l));
  }
  return mlp;
}

}  // namespace

std::string mlp_to_json(const Mlp& mlp) { return mlp_to_json_obj(mlp).dump(); }

Mlp mlp_from_json(const std::string& text) {
  return mlp_from_json_obj(nlohmann::json::parse(text));
}

void save_mlp(const Mlp& mlp, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << mlp_to_json(mlp);
}

Mlp load_mlp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("cannot read " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return mlp_from_json(text);
}

}  // namespace evobj
