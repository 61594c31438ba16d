#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "evobj/shapes.hpp"

namespace evobj {

struct ObjectRecord {
  Category category = Category::Chair;
  std::string template_id;
  RigidTransform pose;  // canonical template frame -> scene frame
  bool occluded = false;
  Bbox bbox;  // of the placed (pre-resampling) points
};

// One composed room: floor rectangle [0,W]x[0,D] at z=0, four walls of
// wall_height, objects with instance ids 1..m (0 = background).
struct Scene {
  PointCloud cloud;
  std::vector<ObjectRecord> objects;
  double floor_w = 0.0, floor_d = 0.0;
  double wall_height = 0.0;

  double floor_extent() const { return std::max(floor_w, floor_d); }
  std::size_t object_count() const { return objects.size(); }
};

struct SceneGenConfig {
  std::uint32_t points_total = 20000;
  std::uint32_t min_objects = 4;
  std::uint32_t max_objects = 8;
  double floor_width = 5.0;
  double aspect_min = 0.6;
  double aspect_max = 1.0;
  double wall_height = 1.2;
  bool occlusion = true;
  std::uint32_t fuse_min = 2;
  std::uint32_t fuse_max = 4;
  std::uint32_t max_attempts = 1000;
  CameraConfig camera;  // occlusion-render camera basis
};

// Collision-checked placement; nullopt = discard signal (some object found
// no free spot within max_attempts position draws).
std::optional<Scene> compose_scene(const std::vector<ShapeTemplate>& pool,
                                   const SceneGenConfig& cfg, std::uint64_t seed);

// Ground-truth masks per object id (1..m), each a sorted index list.
std::vector<std::vector<std::uint32_t>> ground_truth_masks(const Scene& scene);

}  // namespace evobj
