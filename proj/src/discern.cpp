#include "evobj/discern.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "evobj/rng.hpp"
#include "json.hpp"

namespace evobj {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr int kFeatureVersion = 1;

// One Adam pass over a pooled (features, labels) set in minibatches of
// cfg.batch_size, fixed order. Returns the mean BCE over all rows.
double train_epoch(DiscernModel& model, AdamState& state, const AdamConfig& adam,
                   const std::vector<std::vector<double>>& features,
                   const std::vector<std::uint8_t>& labels,
                   const std::vector<std::uint32_t>& order, std::uint32_t batch_size) {
  double loss_sum = 0.0;
  std::size_t pos = 0;
  std::vector<std::vector<double>> inputs;
  while (pos < order.size()) {
    const std::size_t end = std::min(pos + batch_size, order.size());
    inputs.clear();
    inputs.reserve(end - pos);
    for (std::size_t i = pos; i < end; ++i) inputs.push_back(features[order[i]]);
    const ParamTensors grads =
        mlp_backward(model.mlp, inputs, [&](std::size_t s, const std::vector<double>& out) {
          const double y = labels[order[pos + s]];
          loss_sum += bce_loss(out[0], y);
          return std::vector<double>{bce_grad(out[0], y)};
        });
    adam_step(model.mlp, grads, state, adam);
    pos = end;
  }
  return loss_sum / static_cast<double>(order.size());
}

}  // namespace

DiscernModel make_discern_model(int k, double theta, const std::vector<std::uint32_t>& hidden,
                                std::uint64_t seed) {
  std::vector<std::uint32_t> dims{kLocalFeatureDim};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(1);
  DiscernModel model;
  model.mlp = make_mlp(dims, Activation::Sigmoid, seed);
  model.k = k;
  model.theta = theta;
  return model;
}

std::vector<std::vector<double>> discern_features(const CandidateSubset& subset,
                                                  const ContainerPose& pose, int k) {
  const auto raw = local_features(subset, pose, k);
  std::vector<std::vector<double>> rows(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    rows[i].assign(raw[i].begin(), raw[i].end());
    rows[i][3] = 0.1 * std::log1p(rows[i][3]);  // density spans orders of magnitude
  }
  return rows;
}

std::vector<double> discern_predict(const DiscernModel& model, const CandidateSubset& subset,
                                    const ContainerPose& pose) {
  if (subset.empty()) throw InvalidArgument("discern_predict: empty subset");
  const auto rows = discern_features(subset, pose, model.k);
  std::vector<double> probs(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) probs[i] = mlp_forward(model.mlp, rows[i])[0];
  return probs;
}

std::vector<std::uint32_t> binarize_mask(const std::vector<double>& probs, double theta) {
  std::vector<std::uint32_t> fg;
  for (std::uint32_t i = 0; i < probs.size(); ++i)
    if (probs[i] >= theta) fg.push_back(i);
  return fg;
}

PretrainResult pretrain_discern(const std::vector<ShapeTemplate>& pool, const TrainConfig& cfg,
                                int k, double theta, std::uint64_t seed,
                                const CameraConfig& camera,
                                const std::vector<std::uint32_t>& hidden) {
  if (pool.empty()) throw InvalidArgument("pretrain_discern: empty template pool");
  PretrainResult result;
  result.model = make_discern_model(k, theta, hidden, derive_seed(seed, {0x11}));
  AdamConfig adam{cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay};
  AdamState state = AdamState::init(result.model.mlp);

  for (std::uint32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<std::uint32_t> tpl_order(pool.size());
    for (std::uint32_t i = 0; i < tpl_order.size(); ++i) tpl_order[i] = i;
    if (cfg.templates_per_epoch > 0 && cfg.templates_per_epoch < pool.size()) {
      Rng pick_rng(derive_seed(seed, {0x21, epoch}));
      pick_rng.shuffle(tpl_order);
      tpl_order.resize(cfg.templates_per_epoch);
    }
    std::vector<std::vector<double>> features;
    std::vector<std::uint8_t> labels;
    for (const std::uint32_t ti : tpl_order) {
      const PretrainSample sample =
          make_pretrain_sample(pool[ti], derive_seed(seed, {0x22, epoch, ti}), camera);
      CandidateSubset subset;
      subset.points = sample.cloud.points;
      subset.parent_indices.resize(subset.points.size());
      const auto rows = discern_features(subset, sample.pose, k);
      features.insert(features.end(), rows.begin(), rows.end());
      labels.insert(labels.end(), sample.labels.begin(), sample.labels.end());
    }
    std::vector<std::uint32_t> order(features.size());
    for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle_rng(derive_seed(seed, {0x33, epoch}));
    shuffle_rng.shuffle(order);
    const double mean_loss =
        train_epoch(result.model, state, adam, features, labels, order, cfg.batch_size);
    result.loss_curve.push_back(mean_loss);
  }
  return result;
}

EvolveStatus evolve_discern(DiscernModel& model, const std::vector<EvolveCrop>& crops,
                            const TrainConfig& cfg, std::uint64_t seed) {
  if (crops.empty()) return EvolveStatus::NoOp;
  AdamConfig adam{cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay};
  AdamState state = AdamState::init(model.mlp);
  const double yaw_range = cfg.yaw_aug_deg * kPi / 180.0;

  for (std::uint32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<std::vector<double>> features;
    std::vector<std::uint8_t> labels;
    Rng aug_rng(derive_seed(seed, {0x44, epoch}));
    for (const EvolveCrop& crop : crops) {
      const double yaw = aug_rng.uniform(-yaw_range, yaw_range);
      const double scale = aug_rng.uniform(cfg.scale_aug_min, cfg.scale_aug_max);
      const double c = std::cos(yaw), s = std::sin(yaw);
      CandidateSubset subset;
      subset.points.reserve(crop.points.size());
      for (const Vec3& p : crop.points)
        subset.points.push_back(
            {scale * (c * p.x - s * p.y), scale * (s * p.x + c * p.y), scale * p.z});
      subset.parent_indices.resize(subset.points.size());
      ContainerPose pose;
      pose.cx = 0.0;
      pose.cy = 0.0;
      pose.radius = crop.radius * scale;
      pose.z_min = crop.z_min * scale;
      pose.z_max = crop.z_max * scale;
      const auto rows = discern_features(subset, pose, model.k);
      features.insert(features.end(), rows.begin(), rows.end());
      labels.insert(labels.end(), crop.labels.begin(), crop.labels.end());
    }
    std::vector<std::uint32_t> order(features.size());
    for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle_rng(derive_seed(seed, {0x55, epoch}));
    shuffle_rng.shuffle(order);
    train_epoch(model, state, adam, features, labels, order, cfg.batch_size);
  }
  return EvolveStatus::Updated;
}

void save_discern(const DiscernModel& model, const std::string& path) {
  nlohmann::json j = nlohmann::json::parse(mlp_to_json(model.mlp));
  j["theta"] = model.theta;
  j["k"] = model.k;
  j["feature_version"] = kFeatureVersion;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump();
}

DiscernModel load_discern(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("cannot read " + path);
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  nlohmann::json j = nlohmann::json::parse(text);
  if (j.value("feature_version", 0) != kFeatureVersion)
    throw ParseError("discern checkpoint: unsupported feature_version");
  DiscernModel model;
  model.mlp = mlp_from_json(text);
  model.theta = j.at("theta").get<double>();
  model.k = j.at("k").get<int>();
  return model;
}

}  // namespace evobj
