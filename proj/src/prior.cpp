#include "evobj/prior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "evobj/pointio.hpp"
#include "evobj/rng.hpp"

namespace evobj {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Deterministic order-preserving cap: every ceil(n/cap)-th point.
std::vector<Vec3> stride_subsample(const std::vector<Vec3>& pts, std::uint32_t cap) {
  if (pts.size() <= cap) return pts;
  const std::size_t stride = (pts.size() + cap - 1) / cap;
  std::vector<Vec3> out;
  out.reserve(cap);
  for (std::size_t i = 0; i < pts.size(); i += stride) out.push_back(pts[i]);
  return out;
}

Vec3 rotate_z(const Vec3& p, double c, double s) {
  return {c * p.x - s * p.y, s * p.x + c * p.y, p.z};
}

}  // namespace

PriorLibrary::PriorLibrary(const std::vector<ShapeTemplate>& templates, const PriorConfig& cfg)
    : cfg_(cfg) {
  if (templates.empty()) throw InvalidArgument("PriorLibrary: empty template list");
  if (cfg.yaw_bins < 1) throw InvalidArgument("PriorLibrary: yaw_bins must be >= 1");
  if (cfg.cd_threshold <= 0.0 || cfg.tau <= 0.0)
    throw InvalidArgument("PriorLibrary: cd_threshold and tau must be positive");
  std::vector<const ShapeTemplate*> sorted;
  for (const ShapeTemplate& t : templates) sorted.push_back(&t);
  std::sort(sorted.begin(), sorted.end(),
            [](const ShapeTemplate* a, const ShapeTemplate* b) {
              return a->template_id < b->template_id;
            });
  for (const ShapeTemplate* t : sorted) {
    Entry e;
    e.template_id = t->template_id;
    e.category = t->category;
    e.full_points = t->surface_points.points;
    e.index_points = stride_subsample(e.full_points, cfg.template_index_cap);
    e.reverse_points = stride_subsample(e.index_points, cfg.retrieval_query_cap);
    e.tree = KdTree(e.index_points);
    entries_.push_back(std::move(e));
  }
}

CompletionResult complete_candidate(const PointCloud& partial, const PriorLibrary& library) {
  if (partial.size() < 8)
    throw CandidateTooSmall("complete_candidate: fewer than 8 points");
  auto [normalized, to_norm] = normalize_to_unit(partial);  // may throw DegenerateInput
  const PriorConfig& cfg = library.config();

  const std::vector<Vec3> queries = stride_subsample(normalized.points, cfg.retrieval_query_cap);
  // without the completion module there is no occlusion-aware alignment:
  // no yaw search, and matching is symmetric rather than partial-to-full
  const std::uint32_t bins = cfg.completion ? cfg.yaw_bins : 1;

  // rotate the queries once per yaw bin; matching against template j at yaw
  // theta equals matching Rz(-theta) * queries against the canonical template
  std::vector<std::vector<Vec3>> rotated(bins);
  std::vector<double> bin_cos(bins), bin_sin(bins);
  for (std::uint32_t b = 0; b < bins; ++b) {
    const double theta = 2.0 * kPi * b / bins;
    bin_cos[b] = std::cos(theta);
    bin_sin[b] = std::sin(theta);
    rotated[b].reserve(queries.size());
    for (const Vec3& q : queries) rotated[b].push_back(rotate_z(q, bin_cos[b], -bin_sin[b]));
  }

  // reverse side only used when completion (occlusion-aware alignment) is off
  KdTree normalized_tree;
  if (!cfg.completion) normalized_tree = KdTree(normalized.points);

  double best = std::numeric_limits<double>::infinity();
  std::uint32_t best_tpl = 0, best_yaw = 0;
  const double n_queries = static_cast<double>(queries.size());
  for (std::uint32_t ti = 0; ti < library.size(); ++ti) {
    const PriorLibrary::Entry& entry = library.entries()[ti];
    for (std::uint32_t b = 0; b < bins; ++b) {
      // incremental mean with a sound early abort: remaining distances are
      // at least zero, so once the partial sum implies value > best the pair
      // cannot win (ties resolve to the earlier pair either way); in the
      // symmetric mode the forward side contributes half the value
      const double abort_at = (cfg.completion ? 1.0 : 2.0) * best * n_queries;
      double sum = 0.0;
      bool pruned = false;
      for (const Vec3& q : rotated[b]) {
        sum += entry.tree.nearest(q).distance;
        if (sum > abort_at) {
          pruned = true;
          break;
        }
      }
      if (pruned) continue;
      double value = sum / n_queries;
      if (!cfg.completion) {
        double rev = 0.0;
        for (const Vec3& p : entry.reverse_points) {
          const Vec3 scene_p = rotate_z(p, bin_cos[b], bin_sin[b]);
          rev += normalized_tree.nearest(scene_p).distance;
        }
        rev /= static_cast<double>(entry.reverse_points.size());
        value = 0.5 * (value + rev);
      }
      if (value < best) {
        best = value;
        best_tpl = ti;
        best_yaw = b;
      }
    }
  }

  const PriorLibrary::Entry& winner = library.entries()[best_tpl];
  CompletionResult result;
  result.template_id = winner.template_id;
  result.template_index = best_tpl;
  result.yaw_index = best_yaw;
  result.fit = best;

  // canonical -> scene: undo the normalization after applying the yaw
  const double theta = 2.0 * kPi * best_yaw / bins;
  RigidTransform to_scene;
  to_scene.yaw = theta;
  to_scene.uniform_scale = 1.0 / to_norm.uniform_scale;
  to_scene.translation = to_norm.translation * (-1.0 / to_norm.uniform_scale);
  result.transform = to_scene;

  PointCloud canonical;
  canonical.points = winner.full_points;
  std::vector<std::uint8_t> id_bytes(winner.template_id.begin(), winner.template_id.end());
  const PointCloud sampled =
      downsample_random(canonical, cfg.completed_points, fnv1a64(id_bytes));
  result.completed = apply_transform(to_scene, sampled);
  return result;
}

bool objectness_valid(double cd, double cd_threshold) { return cd < cd_threshold; }

double objectness_score_value(double cd, double tau) { return std::exp(-cd / tau); }

ObjectnessResult objectness_score(const PointCloud& candidate, const PriorLibrary& library) {
  ObjectnessResult result;
  result.completion = complete_candidate(candidate, library);
  const PriorConfig& cfg = library.config();
  const PriorLibrary::Entry& entry = library.entries()[result.completion.template_index];

  auto [normalized, to_norm] = normalize_to_unit(candidate);
  const double theta = 2.0 * kPi * result.completion.yaw_index / cfg.yaw_bins;
  const double c = std::cos(theta), s = std::sin(theta);

  // symmetric Chamfer between the normalized candidate and the aligned
  // template, evaluated in the canonical template frame
  std::vector<Vec3> cand_canonical;
  cand_canonical.reserve(normalized.size());
  for (const Vec3& p : normalized.points) cand_canonical.push_back(rotate_z(p, c, -s));
  const double to_template = one_sided_chamfer(cand_canonical, entry.tree);
  KdTree cand_tree(cand_canonical);
  const double from_template = one_sided_chamfer(entry.index_points, cand_tree);
  result.cd = 0.5 * (to_template + from_template);
  result.score = objectness_score_value(result.cd, cfg.tau);
  result.valid = objectness_valid(result.cd, cfg.cd_threshold);
  return result;
}

double reward_from_score(const ObjectnessResult& result, double prev_best, bool terminal) {
  if (prev_best < 0.0 || prev_best > 1.0)
    throw InvalidArgument("reward_from_score: prev_best out of [0,1]");
  double reward = std::max(0.0, result.score - prev_best);
  if (terminal && result.valid) reward += 1.0;
  return reward;
}

}  // namespace evobj
