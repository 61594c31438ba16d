#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "evobj/discern.hpp"
#include "evobj/policy.hpp"
#include "evobj/scenegen.hpp"

namespace evobj {

struct InstancePrediction {
  std::uint32_t scene_id = 0;
  std::vector<std::uint32_t> indices;
  double confidence = 0.0;
};

// Greedy non-maximum suppression over one scene's ledger entries: score
// descending (ties by earlier epoch, then lower first index), accept while
// IoU with every accepted mask stays <= suppress_iou.
std::vector<InstancePrediction> consolidate_masks(const Ledger& ledger, std::uint32_t scene_id,
                                                  double suppress_iou = 0.3);

struct PrCurve {
  double threshold = 0.0;
  std::vector<double> precision;
  std::vector<double> recall;
  double ap = 0.0;
};

struct EvalReport {
  double ap = 0.0;    // mean over 0.50:0.05:0.95
  double ap50 = 0.0;
  double ap25 = 0.0;
  std::vector<PrCurve> curves;
  std::uint32_t scene_count = 0;
};

using SceneMasks = std::vector<std::vector<std::uint32_t>>;
using MasksByScene = std::map<std::uint32_t, SceneMasks>;

// Class-agnostic AP: predictions pooled across scenes by confidence (ties:
// scene id, then first index), matched greedily to the best not-yet-matched
// ground truth of the same scene, all-point PR interpolation.
EvalReport evaluate_ap(const std::vector<InstancePrediction>& preds, const MasksByScene& gts);

// Fraction of ground-truth objects covered by at least one candidate mask at
// IoU >= iou_thr.
double sufficiency(const MasksByScene& candidates, const MasksByScene& gts, double iou_thr);
double ledger_sufficiency(const Ledger& ledger, const std::vector<Scene>& scenes,
                          double iou_thr);

MasksByScene ground_truth_by_scene(const std::vector<Scene>& scenes);

// Mean per-point accuracy of the discerning module inside containers sampled
// over ground-truth objects (env_reset radius and z-range, jittered center).
double discern_accuracy(const DiscernModel& model, const std::vector<Scene>& scenes,
                        std::uint64_t seed);

// Plug-and-play refinement: crops a cylinder around each external mask, runs
// the discerning module, and intersects. Empty results fall back to the
// original mask.
std::vector<std::vector<std::uint32_t>> refine_external_masks(
    const DiscernModel& model, const PointCloud& scene_cloud,
    const std::vector<std::vector<std::uint32_t>>& masks);

}  // namespace evobj
