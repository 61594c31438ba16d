#include "evobj/scenegen.hpp"

#include <algorithm>
#include <cmath>

#include "evobj/rng.hpp"

namespace evobj {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Largest-remainder apportionment of total points across weights.
std::vector<std::uint32_t> apportion(const std::vector<double>& weights, std::uint32_t total) {
  const double sum = [&] {
    double s = 0.0;
    for (const double w : weights) s += w;
    return s;
  }();
  std::vector<std::uint32_t> counts(weights.size(), 0);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::uint32_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double exact = total * weights[i] / sum;
    counts[i] = static_cast<std::uint32_t>(exact);
    assigned += counts[i];
    remainders.push_back({exact - counts[i], i});
  }
  std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
    return a.first > b.first || (a.first == b.first && a.second < b.second);
  });
  for (std::uint32_t k = 0; assigned < total; ++k, ++assigned)
    counts[remainders[k % remainders.size()].second] += 1;
  return counts;
}

}  // namespace

std::optional<Scene> compose_scene(const std::vector<ShapeTemplate>& pool,
                                   const SceneGenConfig& cfg, std::uint64_t seed) {
  if (pool.empty()) throw InvalidArgument("compose_scene: empty template pool");
  Rng rng(derive_seed(seed, {0x5c37}));
  Scene scene;
  const std::uint32_t m =
      cfg.min_objects + static_cast<std::uint32_t>(
                            rng.uniform_index(cfg.max_objects - cfg.min_objects + 1));
  const double aspect = rng.uniform(cfg.aspect_min, cfg.aspect_max);
  scene.floor_w = cfg.floor_width;
  scene.floor_d = aspect * cfg.floor_width;
  scene.wall_height = cfg.wall_height;

  struct Placed {
    std::vector<Vec3> points;
    double area = 0.0;
  };
  std::vector<Placed> placed;

  for (std::uint32_t oi = 0; oi < m; ++oi) {
    const ShapeTemplate& tpl = pool[rng.uniform_index(pool.size())];
    std::vector<Vec3> obj_points;
    double visible_fraction = 1.0;
    if (cfg.occlusion) {
      const std::uint32_t n_views =
          cfg.fuse_min +
          static_cast<std::uint32_t>(rng.uniform_index(cfg.fuse_max - cfg.fuse_min + 1));
      obj_points = fuse_views(tpl, n_views, rng.next_u64(), cfg.camera).points;
      if (obj_points.empty()) obj_points = tpl.surface_points.points;
      visible_fraction = static_cast<double>(obj_points.size()) /
                         static_cast<double>(tpl.surface_points.size());
    } else {
      obj_points = tpl.surface_points.points;
    }
    const double yaw = rng.uniform(-kPi, kPi);
    const double cy = std::cos(yaw), sy = std::sin(yaw);
    for (Vec3& p : obj_points) p = {cy * p.x - sy * p.y, sy * p.x + cy * p.y, p.z};
    const Bbox local = bounding_box(obj_points);
    const Vec3 ext = local.extent();
    if (ext.x > scene.floor_w || ext.y > scene.floor_d) return std::nullopt;

    bool ok = false;
    Vec3 shift;
    Bbox box;
    for (std::uint32_t attempt = 0; attempt < cfg.max_attempts; ++attempt) {
      const double tx = rng.uniform(-local.lo.x, scene.floor_w - local.hi.x);
      const double ty = rng.uniform(-local.lo.y, scene.floor_d - local.hi.y);
      shift = {tx, ty, -local.lo.z};
      box = {local.lo + shift, local.hi + shift};
      bool collides = false;
      for (const ObjectRecord& rec : scene.objects)
        if (box.intersects(rec.bbox)) {
          collides = true;
          break;
        }
      if (!collides) {
        ok = true;
        break;
      }
    }
    if (!ok) return std::nullopt;  // discard signal

    for (Vec3& p : obj_points) p += shift;
    ObjectRecord rec;
    rec.category = tpl.category;
    rec.template_id = tpl.template_id;
    rec.pose = RigidTransform{shift, 1.0, yaw};
    rec.occluded = cfg.occlusion;
    rec.bbox = box;
    scene.objects.push_back(std::move(rec));
    placed.push_back({std::move(obj_points), tpl.surface_area * visible_fraction});
  }

  // surface-area-proportional point budget: floor, walls, then objects
  const double floor_area = scene.floor_w * scene.floor_d;
  const double wall_area = 2.0 * (scene.floor_w + scene.floor_d) * scene.wall_height;
  std::vector<double> weights{floor_area, wall_area};
  for (const Placed& p : placed) weights.push_back(p.area);
  const auto counts = apportion(weights, cfg.points_total);

  PointCloud& cloud = scene.cloud;
  cloud.points.reserve(cfg.points_total);
  cloud.instance_ids.reserve(cfg.points_total);
  Rng bg_rng(derive_seed(seed, {0xf100}));
  for (std::uint32_t i = 0; i < counts[0]; ++i) {
    cloud.points.push_back(
        {bg_rng.uniform(0.0, scene.floor_w), bg_rng.uniform(0.0, scene.floor_d), 0.0});
    cloud.instance_ids.push_back(0);
  }
  // four walls, split by length
  const double w = scene.floor_w, d = scene.floor_d, h = scene.wall_height;
  const auto wall_counts = apportion({w, w, d, d}, counts[1]);
  for (int side = 0; side < 4; ++side) {
    for (std::uint32_t i = 0; i < wall_counts[side]; ++i) {
      const double t = bg_rng.uniform(0.0, side < 2 ? w : d);
      const double z = bg_rng.uniform(0.0, h);
      Vec3 p;
      if (side == 0) p = {t, 0.0, z};
      else if (side == 1) p = {t, d, z};
      else if (side == 2) p = {0.0, t, z};
      else p = {w, t, z};
      cloud.points.push_back(p);
      cloud.instance_ids.push_back(0);
    }
  }
  for (std::size_t oi = 0; oi < placed.size(); ++oi) {
    PointCloud full;
    full.points = std::move(placed[oi].points);
    const PointCloud sampled =
        downsample_random(full, counts[2 + oi], derive_seed(seed, {0xab, oi}));
    for (const Vec3& p : sampled.points) {
      cloud.points.push_back(p);
      cloud.instance_ids.push_back(static_cast<std::uint32_t>(oi + 1));
    }
  }
  return scene;
}

std::vector<std::vector<std::uint32_t>> ground_truth_masks(const Scene& scene) {
  std::vector<std::vector<std::uint32_t>> masks(scene.objects.size());
  for (std::uint32_t i = 0; i < scene.cloud.size(); ++i) {
    const std::uint32_t id = scene.cloud.instance_ids[i];
    if (id > 0 && id <= masks.size()) masks[id - 1].push_back(i);
  }
  return masks;
}

}  // namespace evobj
