#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evobj/geometry.hpp"

namespace evobj {

enum class Category : std::uint8_t { Chair = 0, Sofa, Telephone, Airplane, Rifle, Cabinet };
constexpr int kNumCategories = 6;

std::string to_string(Category c);
Category category_from_string(const std::string& s);

// Canonical full-surface point sample of one procedural object instance,
// normalized so the bbox longest edge is 1 and the bbox center is the
// origin. part_ids record which generator part each point was sampled from.
struct ShapeTemplate {
  Category category = Category::Chair;
  std::string template_id;
  bool test_pool = false;
  PointCloud surface_points;
  std::vector<std::uint16_t> part_ids;
  std::uint16_t part_count = 0;
  double surface_area = 0.0;  // analytic, in the normalized frame
};

struct CameraConfig {
  double distance = 2.0;
  double pitch_deg = 0.0;     // elevation above the horizontal, [0, 30]
  double azimuth_deg = 0.0;   // [-180, 180]
  double fov_deg = 20.0;
  std::uint32_t resolution = 128;
};

// Deterministic procedural instance: composed box/cylinder parts with
// randomized dimensions, surfaces sampled densely enough that each part is
// one connected component at 0.02 linkage while distinct parts stay apart.
ShapeTemplate gen_template(Category category, std::uint64_t seed);

// Pinhole z-buffer projection: keeps, per pixel, the point nearest to the
// camera; the camera sits at `distance` from the origin and looks at it.
// Returns indices into `points`, ascending. Throws on fov <= 0.
std::vector<std::uint32_t> render_partial_indices(const std::vector<Vec3>& points,
                                                  const CameraConfig& cam);
PointCloud render_partial(const ShapeTemplate& tpl, const CameraConfig& cam);

// The fixed set of 12 candidate views for a template (pitch/azimuth drawn
// from the template id; distance/fov/resolution copied from base).
std::vector<CameraConfig> template_view_configs(const ShapeTemplate& tpl,
                                                const CameraConfig& base);

// Union of n_views distinct renders chosen by seed from the 12 candidates.
std::vector<std::uint32_t> fuse_view_indices(const ShapeTemplate& tpl, std::uint32_t n_views,
                                             std::uint64_t seed, const CameraConfig& base);
PointCloud fuse_views(const ShapeTemplate& tpl, std::uint32_t n_views, std::uint64_t seed,
                      const CameraConfig& base = CameraConfig{});

// One synthetic foreground/background training pair: a fused partial object
// scaled by [0.8, 1.5] resting on a floor disk at z=0, with one or two wall
// strips, all inside an enclosing container. Object points come first.
struct PretrainSample {
  PointCloud cloud;
  std::vector<std::uint8_t> labels;  // 1 = object, 0 = plane
  ContainerPose pose;
};

PretrainSample make_pretrain_sample(const ShapeTemplate& tpl, std::uint64_t seed,
                                    const CameraConfig& base = CameraConfig{});

struct ShapeLibrary {
  std::vector<ShapeTemplate> train;
  std::vector<ShapeTemplate> test;
};

// 2 * per_category instances per category; a template generated from an even
// seed lands in the train pool, odd in the test pool. Pools never share ids.
ShapeLibrary build_library(const std::vector<Category>& categories, std::uint32_t per_category,
                           std::uint64_t seed);

const ShapeTemplate* find_template(const std::vector<ShapeTemplate>& pool, const std::string& id);

}  // namespace evobj
