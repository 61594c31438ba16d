#include "evobj/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "evobj/rng.hpp"

namespace evobj {

namespace {

constexpr double kPi = 3.14159265358979323846;
// Floor for the k-NN bounding-sphere volume (radius 1e-3) so coincident
// neighbourhoods do not divide by zero.
constexpr double kMinSphereVolume = 4.0 / 3.0 * kPi * 1e-9;

// Eigenvalues of a symmetric 3x3 matrix by cyclic Jacobi, descending.
std::array<double, 3> symmetric_eigenvalues(double a00, double a01, double a02, double a11,
                                            double a12, double a22) {
  double m[3][3] = {{a00, a01, a02}, {a01, a11, a12}, {a02, a12, a22}};
  for (int sweep = 0; sweep < 32; ++sweep) {
    const double off = m[0][1] * m[0][1] + m[0][2] * m[0][2] + m[1][2] * m[1][2];
    if (off < 1e-30) break;
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        if (m[p][q] == 0.0) continue;
        const double theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int i = 0; i < 3; ++i) {
          const double mip = m[i][p], miq = m[i][q];
          m[i][p] = c * mip - s * miq;
          m[i][q] = s * mip + c * miq;
        }
        for (int i = 0; i < 3; ++i) {
          const double mpi = m[p][i], mqi = m[q][i];
          m[p][i] = c * mpi - s * mqi;
          m[q][i] = s * mpi + c * mqi;
        }
      }
    }
  }
  std::array<double, 3> ev{m[0][0], m[1][1], m[2][2]};
  std::sort(ev.begin(), ev.end(), std::greater<double>());
  return ev;
}

}  // namespace

Vec3 RigidTransform::apply(const Vec3& p) const {
  const double c = std::cos(yaw), s = std::sin(yaw);
  return Vec3{uniform_scale * (c * p.x - s * p.y) + translation.x,
              uniform_scale * (s * p.x + c * p.y) + translation.y,
              uniform_scale * p.z + translation.z};
}

RigidTransform RigidTransform::inverse() const {
  RigidTransform inv;
  inv.uniform_scale = 1.0 / uniform_scale;
  inv.yaw = -yaw;
  const double c = std::cos(yaw), s = std::sin(yaw);
  // -1/s * Rz(-yaw) * t
  inv.translation = Vec3{-(c * translation.x + s * translation.y) / uniform_scale,
                         -(-s * translation.x + c * translation.y) / uniform_scale,
                         -translation.z / uniform_scale};
  return inv;
}

PointCloud apply_transform(const RigidTransform& t, const PointCloud& cloud) {
  PointCloud out;
  out.points.reserve(cloud.size());
  for (const Vec3& p : cloud.points) out.points.push_back(t.apply(p));
  out.instance_ids = cloud.instance_ids;
  return out;
}

double Bbox::longest_edge() const {
  const Vec3 e = extent();
  return std::max(e.x, std::max(e.y, e.z));
}

bool Bbox::intersects(const Bbox& o) const {
  // positive-volume overlap only; touching faces do not count
  return lo.x < o.hi.x && o.lo.x < hi.x && lo.y < o.hi.y && o.lo.y < hi.y && lo.z < o.hi.z &&
         o.lo.z < hi.z;
}

Bbox bounding_box(const std::vector<Vec3>& points) {
  if (points.empty()) throw InvalidArgument("bounding_box: empty point set");
  Bbox b{points[0], points[0]};
  for (const Vec3& p : points) {
    b.lo = {std::min(b.lo.x, p.x), std::min(b.lo.y, p.y), std::min(b.lo.z, p.z)};
    b.hi = {std::max(b.hi.x, p.x), std::max(b.hi.y, p.y), std::max(b.hi.z, p.z)};
  }
  return b;
}

double one_sided_chamfer(const std::vector<Vec3>& src, const KdTree& dst_tree) {
  if (src.empty() || dst_tree.empty())
    throw InvalidArgument("one_sided_chamfer: empty point cloud");
  double sum = 0.0;
  for (const Vec3& p : src) sum += dst_tree.nearest(p).distance;
  return sum / static_cast<double>(src.size());
}

double one_sided_chamfer(const PointCloud& src, const PointCloud& dst) {
  if (src.empty() || dst.empty()) throw InvalidArgument("one_sided_chamfer: empty point cloud");
  KdTree tree(dst.points);
  return one_sided_chamfer(src.points, tree);
}

double chamfer(const std::vector<Vec3>& a, const KdTree& b_tree) {
  if (a.empty() || b_tree.empty()) throw InvalidArgument("chamfer: empty point cloud");
  KdTree a_tree(a);
  return 0.5 * (one_sided_chamfer(a, b_tree) + one_sided_chamfer(b_tree.points(), a_tree));
}

double chamfer(const PointCloud& a, const PointCloud& b) {
  if (a.empty() || b.empty()) throw InvalidArgument("chamfer: empty point cloud");
  KdTree b_tree(b.points);
  return chamfer(a.points, b_tree);
}

double mask_iou(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::vector<std::uint32_t> sa = a, sb = b;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  std::size_t inter = 0, ia = 0, ib = 0;
  while (ia < sa.size() && ib < sb.size()) {
    if (sa[ia] < sb[ib]) {
      ++ia;
    } else if (sb[ib] < sa[ia]) {
      ++ib;
    } else {
      ++inter;
      ++ia;
      ++ib;
    }
  }
  const std::size_t uni = sa.size() + sb.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

KdTree::Hit nearest_neighbor(const Vec3& query, const PointCloud& cloud) {
  if (cloud.empty()) throw InvalidArgument("nearest_neighbor: empty point cloud");
  KdTree tree(cloud.points);
  return tree.nearest(query);
}

CandidateSubset crop_cylinder(const PointCloud& scene, const ContainerPose& pose) {
  if (pose.radius <= 0.0 || pose.z_max <= pose.z_min)
    throw InvalidArgument("crop_cylinder: invalid container pose");
  CandidateSubset out;
  const double r2 = pose.radius * pose.radius;
  for (std::uint32_t i = 0; i < scene.size(); ++i) {
    const Vec3& p = scene.points[i];
    const double dx = p.x - pose.cx, dy = p.y - pose.cy;
    if (dx * dx + dy * dy <= r2 && p.z >= pose.z_min && p.z <= pose.z_max) {
      out.parent_indices.push_back(i);
      out.points.push_back(p);
    }
  }
  return out;
}

PointCloud downsample_random(const PointCloud& cloud, std::uint32_t n, std::uint64_t seed) {
  if (cloud.empty()) throw InvalidArgument("downsample_random: empty point cloud");
  if (n < 1) throw InvalidArgument("downsample_random: n must be >= 1");
  Rng rng(seed);
  const std::uint32_t total = static_cast<std::uint32_t>(cloud.size());
  std::vector<std::uint32_t> picked;
  if (total >= n) {
    picked = rng.sample_without_replacement(total, n);
  } else {
    picked.reserve(n);
    for (std::uint32_t i = 0; i < total; ++i) picked.push_back(i);
    for (std::uint32_t i = total; i < n; ++i)
      picked.push_back(static_cast<std::uint32_t>(rng.uniform_index(total)));
  }
  PointCloud out;
  out.points.reserve(n);
  if (cloud.has_ids()) out.instance_ids.reserve(n);
  for (std::uint32_t idx : picked) {
    out.points.push_back(cloud.points[idx]);
    if (cloud.has_ids()) out.instance_ids.push_back(cloud.instance_ids[idx]);
  }
  return out;
}

std::pair<PointCloud, RigidTransform> normalize_to_unit(const PointCloud& cloud) {
  if (cloud.empty()) throw InvalidArgument("normalize_to_unit: empty point cloud");
  const Bbox box = bounding_box(cloud.points);
  const double longest = box.longest_edge();
  if (longest <= 0.0) throw DegenerateInput("normalize_to_unit: zero-extent point cloud");
  RigidTransform t;
  t.uniform_scale = 1.0 / longest;
  const Vec3 c = box.center();
  t.translation = Vec3{-c.x / longest, -c.y / longest, -c.z / longest};
  return {apply_transform(t, cloud), t};
}

std::vector<std::array<double, kLocalFeatureDim>> local_features(const CandidateSubset& subset,
                                                                 const ContainerPose& pose,
                                                                 int k) {
  if (k < 3) throw InvalidArgument("local_features: k must be >= 3");
  const std::size_t n = subset.size();
  std::vector<std::array<double, kLocalFeatureDim>> out(n);
  if (n == 0) return out;

  double z_min = subset.points[0].z;
  double z_sum = 0.0;
  for (const Vec3& p : subset.points) {
    z_min = std::min(z_min, p.z);
    z_sum += p.z;
  }
  const double z_centroid = z_sum / static_cast<double>(n);

  KdTree tree(subset.points);
  std::vector<Vec3> nbhd;
  for (std::uint32_t i = 0; i < n; ++i) {
    const Vec3& p = subset.points[i];
    auto& f = out[i];
    f[0] = p.z - z_min;
    const double dx = p.x - pose.cx, dy = p.y - pose.cy;
    f[1] = std::sqrt(dx * dx + dy * dy) / pose.radius;
    f[4] = p.z - z_centroid;

    const auto hits = tree.knn(p, static_cast<std::uint32_t>(k), i);
    if (hits.empty()) {
      f[2] = 0.0;
      f[3] = 0.0;
      continue;
    }
    nbhd.clear();
    nbhd.push_back(p);
    for (const auto& h : hits) nbhd.push_back(subset.points[h.index]);

    Vec3 mean{0, 0, 0};
    for (const Vec3& q : nbhd) mean += q;
    mean = mean / static_cast<double>(nbhd.size());
    double c00 = 0, c01 = 0, c02 = 0, c11 = 0, c12 = 0, c22 = 0;
    for (const Vec3& q : nbhd) {
      const Vec3 d = q - mean;
      c00 += d.x * d.x;
      c01 += d.x * d.y;
      c02 += d.x * d.z;
      c11 += d.y * d.y;
      c12 += d.y * d.z;
      c22 += d.z * d.z;
    }
    const double inv = 1.0 / static_cast<double>(nbhd.size());
    const auto ev = symmetric_eigenvalues(c00 * inv, c01 * inv, c02 * inv, c11 * inv, c12 * inv,
                                          c22 * inv);
    f[2] = ev[0] > 1e-18 ? 1.0 - std::max(ev[2], 0.0) / ev[0] : 0.0;

    const double rk = hits.back().distance;
    const double volume = std::max(4.0 / 3.0 * kPi * rk * rk * rk, kMinSphereVolume);
    f[3] = static_cast<double>(hits.size()) / volume;
  }
  return out;
}

}  // namespace evobj
