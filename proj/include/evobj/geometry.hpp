#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "evobj/common.hpp"
#include "evobj/kdtree.hpp"

namespace evobj {

// Scene or object point set, coordinates in meters. instance_ids is either
// empty or has one id per point; id 0 means background.
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<std::uint32_t> instance_ids;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_ids() const { return !instance_ids.empty(); }
};

// K points cropped out of a parent cloud; parent_indices are unique,
// ascending, and index into the parent.
struct CandidateSubset {
  std::vector<std::uint32_t> parent_indices;
  std::vector<Vec3> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

// Cylindrical crop region: the container agent's state on a scene.
struct ContainerPose {
  double cx = 0.0, cy = 0.0;
  double radius = 1.0;
  double z_min = 0.0, z_max = 1.0;
};

// Similarity transform p' = scale * Rz(yaw) * p + translation.
struct RigidTransform {
  Vec3 translation{0.0, 0.0, 0.0};
  double uniform_scale = 1.0;
  double yaw = 0.0;

  Vec3 apply(const Vec3& p) const;
  RigidTransform inverse() const;
  static RigidTransform identity() { return {}; }
};

PointCloud apply_transform(const RigidTransform& t, const PointCloud& cloud);

struct Bbox {
  Vec3 lo, hi;
  Vec3 center() const { return (lo + hi) * 0.5; }
  Vec3 extent() const { return hi - lo; }
  double longest_edge() const;
  bool intersects(const Bbox& o) const;
};

Bbox bounding_box(const std::vector<Vec3>& points);

// Symmetric Chamfer distance: 0.5 * (mean_a min dist to b + mean_b min dist
// to a), non-squared Euclidean. Throws InvalidArgument on empty input.
double chamfer(const PointCloud& a, const PointCloud& b);

// Mean over src of Euclidean distance to the nearest dst point.
double one_sided_chamfer(const PointCloud& src, const PointCloud& dst);

// Variants against a prebuilt index, for callers that query one target many
// times.
double chamfer(const std::vector<Vec3>& a, const KdTree& b_tree);
double one_sided_chamfer(const std::vector<Vec3>& src, const KdTree& dst_tree);

// |a ∩ b| / |a ∪ b| over index sets; both empty -> 1.
double mask_iou(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b);

// Exact nearest neighbour, ties by lowest index.
KdTree::Hit nearest_neighbor(const Vec3& query, const PointCloud& cloud);

// All points with (x-cx)^2 + (y-cy)^2 <= r^2 and z_min <= z <= z_max,
// boundary inclusive, in ascending index order.
CandidateSubset crop_cylinder(const PointCloud& scene, const ContainerPose& pose);

// Uniform sample without replacement down to n points, or pad by resampling
// with replacement up to n. Deterministic in (cloud, n, seed). Instance ids
// follow their points.
PointCloud downsample_random(const PointCloud& cloud, std::uint32_t n, std::uint64_t seed);

// Translates the bbox center to the origin and scales the longest bbox edge
// to 1. Returns the normalized cloud and the original->normalized transform.
// Throws DegenerateInput when the cloud has zero extent.
std::pair<PointCloud, RigidTransform> normalize_to_unit(const PointCloud& cloud);

constexpr int kLocalFeatureDim = 5;

// Per-point features over a container crop, in fixed order:
//   0: height above the subset z-min
//   1: radial distance to the container axis / radius
//   2: local planarity, 1 - lambda3/lambda1 of the k-NN covariance
//   3: local density, k / clamped volume of the k-NN bounding sphere
//   4: z offset from the subset centroid
// Neighbourhoods shrink when the subset has fewer than k+1 points; a single
// point gets planarity 0 and density 0.
std::vector<std::array<double, kLocalFeatureDim>> local_features(const CandidateSubset& subset,
                                                                 const ContainerPose& pose, int k);

}  // namespace evobj
