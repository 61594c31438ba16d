#pragma once

#include <cstdint>
#include <vector>

#include "evobj/geometry.hpp"
#include "evobj/shapes.hpp"
#include "evobj/tinylearn.hpp"

namespace evobj {

// Per-point foreground/background classifier over local geometric features.
struct DiscernModel {
  Mlp mlp;            // feature dim in, sigmoid scalar out
  int k = 8;          // neighbourhood size for local_features
  double theta = 0.5; // decision threshold
};

struct TrainConfig {
  double lr = 1e-3;
  double weight_decay = 1e-4;
  std::uint32_t batch_size = 32;
  std::uint32_t epochs = 20;
  double yaw_aug_deg = 180.0;  // evolve-time augmentation
  double scale_aug_min = 0.9;
  double scale_aug_max = 1.1;
  std::uint32_t templates_per_epoch = 48;  // pretrain subsample; 0 = all
};

DiscernModel make_discern_model(int k, double theta, const std::vector<std::uint32_t>& hidden,
                                std::uint64_t seed);

// local_features with the density channel squashed to a trainable range;
// this is the classifier's input representation.
std::vector<std::vector<double>> discern_features(const CandidateSubset& subset,
                                                  const ContainerPose& pose, int k);

// One probability per subset point, order-aligned.
std::vector<double> discern_predict(const DiscernModel& model, const CandidateSubset& subset,
                                    const ContainerPose& pose);

// Subset-local indices with prob >= theta.
std::vector<std::uint32_t> binarize_mask(const std::vector<double>& probs, double theta);

struct PretrainResult {
  DiscernModel model;
  std::vector<double> loss_curve;  // mean BCE per epoch
};

// Stage-1 pretraining on synthetic plane-augmented samples.
PretrainResult pretrain_discern(const std::vector<ShapeTemplate>& pool, const TrainConfig& cfg,
                                int k, double theta, std::uint64_t seed,
                                const CameraConfig& camera = CameraConfig{},
                                const std::vector<std::uint32_t>& hidden = {32, 32});

// A pseudo-label crop in the container frame (axis at x=y=0).
struct EvolveCrop {
  std::vector<Vec3> points;
  std::vector<std::uint8_t> labels;  // 1 = foreground
  double radius = 1.0;
  double z_min = 0.0, z_max = 1.0;
};

enum class EvolveStatus { Updated, NoOp };

// Stage-2 fine-tuning with yaw/scale augmentation. Empty batch -> NoOp.
EvolveStatus evolve_discern(DiscernModel& model, const std::vector<EvolveCrop>& crops,
                            const TrainConfig& cfg, std::uint64_t seed);

// Checkpoint = tinylearn JSON plus {"theta", "k", "feature_version"}.
void save_discern(const DiscernModel& model, const std::string& path);
DiscernModel load_discern(const std::string& path);

}  // namespace evobj
