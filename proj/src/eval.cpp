#include "evobj/eval.hpp"

#include <algorithm>
#include <cmath>

namespace evobj {

std::vector<InstancePrediction> consolidate_masks(const Ledger& ledger, std::uint32_t scene_id,
                                                  double suppress_iou) {
  std::vector<const PseudoLabel*> items;
  for (const PseudoLabel& e : ledger.entries)
    if (e.scene_id == scene_id && !e.mask.empty()) items.push_back(&e);
  std::sort(items.begin(), items.end(), [](const PseudoLabel* a, const PseudoLabel* b) {
    if (a->score != b->score) return a->score > b->score;
    if (a->epoch != b->epoch) return a->epoch < b->epoch;
    return a->mask.front() < b->mask.front();
  });
  std::vector<InstancePrediction> out;
  for (const PseudoLabel* e : items) {
    bool suppressed = false;
    for (const InstancePrediction& kept : out)
      if (mask_iou(e->mask, kept.indices) > suppress_iou) {
        suppressed = true;
        break;
      }
    if (!suppressed) out.push_back({scene_id, e->mask, e->score});
  }
  return out;
}

namespace {

// PR pass at one IoU threshold over the pre-sorted prediction pool.
PrCurve pr_at_threshold(const std::vector<const InstancePrediction*>& pool,
                        const MasksByScene& gts, std::size_t total_gt, double threshold) {
  PrCurve curve;
  curve.threshold = threshold;
  std::map<std::uint32_t, std::vector<bool>> matched;
  for (const auto& [scene_id, masks] : gts) matched[scene_id].assign(masks.size(), false);

  std::size_t tp = 0;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const InstancePrediction& pred = *pool[i];
    double best_iou = 0.0;
    int best_gt = -1;
    const auto it = gts.find(pred.scene_id);
    if (it != gts.end()) {
      const SceneMasks& masks = it->second;
      auto& used = matched[pred.scene_id];
      for (std::size_t g = 0; g < masks.size(); ++g) {
        if (used[g]) continue;
        const double iou = mask_iou(pred.indices, masks[g]);
        if (iou > best_iou) {
          best_iou = iou;
          best_gt = static_cast<int>(g);
        }
      }
    }
    if (best_gt >= 0 && best_iou >= threshold) {
      matched[pred.scene_id][best_gt] = true;
      ++tp;
    }
    curve.precision.push_back(static_cast<double>(tp) / static_cast<double>(i + 1));
    curve.recall.push_back(total_gt > 0 ? static_cast<double>(tp) / static_cast<double>(total_gt)
                                        : 0.0);
  }

  if (total_gt == 0) {
    curve.ap = pool.empty() ? 1.0 : 0.0;
    return curve;
  }
  // all-point interpolation: monotone precision envelope from the right
  std::vector<double> prec = curve.precision;
  for (std::size_t i = prec.size(); i-- > 1;) prec[i - 1] = std::max(prec[i - 1], prec[i]);
  double ap = 0.0, prev_recall = 0.0;
  for (std::size_t i = 0; i < prec.size(); ++i) {
    ap += (curve.recall[i] - prev_recall) * prec[i];
    prev_recall = curve.recall[i];
  }
  curve.ap = ap;
  return curve;
}

}  // namespace

EvalReport evaluate_ap(const std::vector<InstancePrediction>& preds, const MasksByScene& gts) {
  std::vector<const InstancePrediction*> pool;
  pool.reserve(preds.size());
  for (const InstancePrediction& p : preds) {
    if (gts.find(p.scene_id) == gts.end())
      throw InvalidArgument("evaluate_ap: prediction references unknown scene id");
    pool.push_back(&p);
  }
  std::sort(pool.begin(), pool.end(),
            [](const InstancePrediction* a, const InstancePrediction* b) {
              if (a->confidence != b->confidence) return a->confidence > b->confidence;
              if (a->scene_id != b->scene_id) return a->scene_id < b->scene_id;
              const std::uint32_t fa = a->indices.empty() ? 0xffffffffu : a->indices.front();
              const std::uint32_t fb = b->indices.empty() ? 0xffffffffu : b->indices.front();
              return fa < fb;
            });
  std::size_t total_gt = 0;
  for (const auto& [scene_id, masks] : gts) total_gt += masks.size();

  EvalReport report;
  report.scene_count = static_cast<std::uint32_t>(gts.size());
  report.curves.push_back(pr_at_threshold(pool, gts, total_gt, 0.25));
  report.ap25 = report.curves.back().ap;
  double sum = 0.0;
  for (int k = 0; k < 10; ++k) {
    const double t = 0.50 + 0.05 * k;
    report.curves.push_back(pr_at_threshold(pool, gts, total_gt, t));
    sum += report.curves.back().ap;
    if (k == 0) report.ap50 = report.curves.back().ap;
  }
  report.ap = sum / 10.0;
  return report;
}

double sufficiency(const MasksByScene& candidates, const MasksByScene& gts, double iou_thr) {
  if (iou_thr <= 0.0 || iou_thr >= 1.0) throw InvalidArgument("sufficiency: iou_thr out of (0,1)");
  std::size_t total = 0, covered = 0;
  for (const auto& [scene_id, masks] : gts) {
    const auto it = candidates.find(scene_id);
    for (const auto& gt_mask : masks) {
      ++total;
      if (it == candidates.end()) continue;
      for (const auto& cand : it->second)
        if (mask_iou(cand, gt_mask) >= iou_thr) {
          ++covered;
          break;
        }
    }
  }
  if (total == 0) return 1.0;
  return static_cast<double>(covered) / static_cast<double>(total);
}

MasksByScene ground_truth_by_scene(const std::vector<Scene>& scenes) {
  MasksByScene gts;
  for (std::uint32_t si = 0; si < scenes.size(); ++si) gts[si] = ground_truth_masks(scenes[si]);
  return gts;
}

double ledger_sufficiency(const Ledger& ledger, const std::vector<Scene>& scenes,
                          double iou_thr) {
  MasksByScene candidates;
  for (const PseudoLabel& e : ledger.entries) candidates[e.scene_id].push_back(e.mask);
  return sufficiency(candidates, ground_truth_by_scene(scenes), iou_thr);
}

double discern_accuracy(const DiscernModel& model, const std::vector<Scene>& scenes,
                        std::uint64_t seed) {
  if (scenes.empty()) throw InvalidArgument("discern_accuracy: empty scene set");
  double acc_sum = 0.0;
  std::size_t containers = 0;
  for (std::uint32_t si = 0; si < scenes.size(); ++si) {
    const Scene& scene = scenes[si];
    const auto gt_masks = ground_truth_masks(scene);
    Rng rng(derive_seed(seed, {0xacc, si}));
    for (const auto& mask : gt_masks) {
      if (mask.empty()) continue;
      double cx = 0.0, cy = 0.0;
      for (const std::uint32_t i : mask) {
        cx += scene.cloud.points[i].x;
        cy += scene.cloud.points[i].y;
      }
      cx /= static_cast<double>(mask.size());
      cy /= static_cast<double>(mask.size());
      ContainerPose pose;
      pose.radius = kSpawnRadiusFraction * scene.floor_extent();
      pose.cx = cx + rng.uniform(-0.3, 0.3) * pose.radius;
      pose.cy = cy + rng.uniform(-0.3, 0.3) * pose.radius;
      pose.z_min = 0.0;
      pose.z_max = scene.wall_height;
      const CandidateSubset subset = crop_cylinder(scene.cloud, pose);
      if (subset.empty()) continue;
      const auto probs = discern_predict(model, subset, pose);
      std::size_t correct = 0;
      for (std::size_t i = 0; i < subset.size(); ++i) {
        const bool pred_fg = probs[i] >= model.theta;
        const bool is_fg = scene.cloud.instance_ids[subset.parent_indices[i]] != 0;
        if (pred_fg == is_fg) ++correct;
      }
      acc_sum += static_cast<double>(correct) / static_cast<double>(subset.size());
      ++containers;
    }
  }
  return containers > 0 ? acc_sum / static_cast<double>(containers) : 0.0;
}

std::vector<std::vector<std::uint32_t>> refine_external_masks(
    const DiscernModel& model, const PointCloud& scene_cloud,
    const std::vector<std::vector<std::uint32_t>>& masks) {
  std::vector<std::vector<std::uint32_t>> out;
  out.reserve(masks.size());
  for (const auto& mask : masks) {
    for (const std::uint32_t i : mask)
      if (i >= scene_cloud.size())
        throw InvalidArgument("refine_external_masks: mask index out of range");
    if (mask.empty()) {
      out.push_back(mask);
      continue;
    }
    double lo_x = 1e300, hi_x = -1e300, lo_y = 1e300, hi_y = -1e300;
    double lo_z = 1e300, hi_z = -1e300;
    for (const std::uint32_t i : mask) {
      const Vec3& p = scene_cloud.points[i];
      lo_x = std::min(lo_x, p.x);
      hi_x = std::max(hi_x, p.x);
      lo_y = std::min(lo_y, p.y);
      hi_y = std::max(hi_y, p.y);
      lo_z = std::min(lo_z, p.z);
      hi_z = std::max(hi_z, p.z);
    }
    ContainerPose pose;
    pose.cx = 0.5 * (lo_x + hi_x);
    pose.cy = 0.5 * (lo_y + hi_y);
    pose.radius =
        std::max(1.1 * 0.5 * std::hypot(hi_x - lo_x, hi_y - lo_y), 1e-6);
    pose.z_min = lo_z;
    pose.z_max = std::max(hi_z, lo_z + 1e-6);
    const CandidateSubset subset = crop_cylinder(scene_cloud, pose);
    std::vector<std::uint32_t> refined;
    if (!subset.empty()) {
      const auto probs = discern_predict(model, subset, pose);
      std::vector<std::uint32_t> fg_parent;
      for (std::size_t i = 0; i < subset.size(); ++i)
        if (probs[i] >= model.theta) fg_parent.push_back(subset.parent_indices[i]);
      std::vector<std::uint32_t> sorted_mask = mask;
      std::sort(sorted_mask.begin(), sorted_mask.end());
      std::set_intersection(sorted_mask.begin(), sorted_mask.end(), fg_parent.begin(),
                            fg_parent.end(), std::back_inserter(refined));
    }
    if (refined.empty()) refined = mask;  // fallback keeps masks non-empty
    out.push_back(std::move(refined));
  }
  return out;
}

}  // namespace evobj
