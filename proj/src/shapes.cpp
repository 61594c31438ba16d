#include "evobj/shapes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "evobj/pointio.hpp"
#include "evobj/rng.hpp"

namespace evobj {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kPartGap = 0.045;    // clearance between parts, design frame
constexpr double kSampleCell = 0.0095;  // surface grid pitch, design frame
constexpr double kJitter = 0.15;      // in-plane jitter, fraction of a cell
constexpr std::size_t kMinTemplatePoints = 4096;

struct BoxPrim {
  Vec3 center;
  Vec3 half;
};

struct CylPrim {
  Vec3 center;  // axis along z
  double radius = 0.0;
  double half_height = 0.0;
};

struct Part {
  bool is_box = true;
  BoxPrim box;
  CylPrim cyl;
};

double part_area(const Part& p) {
  if (p.is_box) {
    const Vec3& h = p.box.half;
    return 8.0 * (h.x * h.y + h.y * h.z + h.x * h.z);
  }
  return 2.0 * kPi * p.cyl.radius * (2.0 * p.cyl.half_height) + 2.0 * kPi * p.cyl.radius * p.cyl.radius;
}

// Jittered grid over one rectangular face. u/v are the in-plane axes.
void sample_face(const Vec3& origin, const Vec3& u_axis, double u_len, const Vec3& v_axis,
                 double v_len, double cell, Rng& rng, std::vector<Vec3>& out) {
  const int nu = std::max(1, static_cast<int>(std::ceil(u_len / cell)));
  const int nv = std::max(1, static_cast<int>(std::ceil(v_len / cell)));
  const double du = u_len / nu, dv = v_len / nv;
  for (int i = 0; i < nu; ++i) {
    for (int j = 0; j < nv; ++j) {
      const double su = (i + 0.5 + rng.uniform(-kJitter, kJitter)) * du;
      const double sv = (j + 0.5 + rng.uniform(-kJitter, kJitter)) * dv;
      out.push_back(origin + u_axis * su + v_axis * sv);
    }
  }
}

void sample_box(const BoxPrim& b, double cell, Rng& rng, std::vector<Vec3>& out) {
  const Vec3& c = b.center;
  const Vec3& h = b.half;
  const Vec3 ex{1, 0, 0}, ey{0, 1, 0}, ez{0, 0, 1};
  // +-z faces
  sample_face({c.x - h.x, c.y - h.y, c.z + h.z}, ex, 2 * h.x, ey, 2 * h.y, cell, rng, out);
  sample_face({c.x - h.x, c.y - h.y, c.z - h.z}, ex, 2 * h.x, ey, 2 * h.y, cell, rng, out);
  // +-y faces
  sample_face({c.x - h.x, c.y + h.y, c.z - h.z}, ex, 2 * h.x, ez, 2 * h.z, cell, rng, out);
  sample_face({c.x - h.x, c.y - h.y, c.z - h.z}, ex, 2 * h.x, ez, 2 * h.z, cell, rng, out);
  // +-x faces
  sample_face({c.x + h.x, c.y - h.y, c.z - h.z}, ey, 2 * h.y, ez, 2 * h.z, cell, rng, out);
  sample_face({c.x - h.x, c.y - h.y, c.z - h.z}, ey, 2 * h.y, ez, 2 * h.z, cell, rng, out);
}

void sample_cylinder(const CylPrim& cy, double cell, Rng& rng, std::vector<Vec3>& out) {
  const int ntheta = std::max(3, static_cast<int>(std::ceil(2.0 * kPi * cy.radius / cell)));
  const int nz = std::max(1, static_cast<int>(std::ceil(2.0 * cy.half_height / cell)));
  const double dtheta = 2.0 * kPi / ntheta;
  const double dz = 2.0 * cy.half_height / nz;
  for (int i = 0; i < ntheta; ++i) {
    for (int j = 0; j < nz; ++j) {
      const double theta = (i + 0.5 + rng.uniform(-kJitter, kJitter)) * dtheta;
      const double z = cy.center.z - cy.half_height + (j + 0.5 + rng.uniform(-kJitter, kJitter)) * dz;
      out.push_back({cy.center.x + cy.radius * std::cos(theta),
                     cy.center.y + cy.radius * std::sin(theta), z});
    }
  }
  // caps: concentric rings plus a center point
  for (const double zc : {cy.center.z + cy.half_height, cy.center.z - cy.half_height}) {
    out.push_back({cy.center.x, cy.center.y, zc});
    const int nr = std::max(1, static_cast<int>(std::ceil(cy.radius / cell)));
    const double dr = cy.radius / nr;
    for (int ri = 0; ri < nr; ++ri) {
      const double r = (ri + 0.5) * dr;
      const int na = std::max(3, static_cast<int>(std::ceil(2.0 * kPi * r / cell)));
      const double da = 2.0 * kPi / na;
      for (int ai = 0; ai < na; ++ai) {
        const double a = (ai + 0.5 + rng.uniform(-kJitter, kJitter)) * da;
        out.push_back({cy.center.x + r * std::cos(a), cy.center.y + r * std::sin(a), zc});
      }
    }
  }
}

Part make_box(Vec3 center, Vec3 half) {
  Part p;
  p.is_box = true;
  p.box = {center, half};
  return p;
}

Part make_cyl(Vec3 center, double radius, double half_height) {
  Part p;
  p.is_box = false;
  p.cyl = {center, radius, half_height};
  return p;
}

std::vector<Part> design_parts(Category cat, Rng& rng) {
  const double g = kPartGap;
  std::vector<Part> parts;
  switch (cat) {
    case Category::Chair: {
      const double lt = rng.uniform(0.014, 0.032);
      const double leg_h = rng.uniform(0.30, 0.46);
      const double sx = rng.uniform(0.18, 0.28);
      const double sy = rng.uniform(0.17, 0.26);
      const double st = rng.uniform(0.018, 0.04);
      const double seat_top = leg_h + g + 2 * st;
      const double bt = rng.uniform(0.012, 0.03);
      const double bh = rng.uniform(0.16, 0.30);
      const double bx = sx * rng.uniform(0.80, 1.0);
      parts.push_back(make_box({0, 0, leg_h + g + st}, {sx, sy, st}));                   // seat
      parts.push_back(make_box({0, -(sy - bt), seat_top + g + bh}, {bx, bt, bh}));       // back
      const double ox = sx - lt - 0.005, oy = sy - lt - 0.005;
      for (const double fx : {-1.0, 1.0})
        for (const double fy : {-1.0, 1.0})
          parts.push_back(make_cyl({fx * ox, fy * oy, leg_h * 0.5}, lt, leg_h * 0.5));   // legs
      break;
    }
    case Category::Sofa: {
      const double hx = rng.uniform(0.26, 0.40);
      const double hy = rng.uniform(0.16, 0.26);
      const double hz = rng.uniform(0.07, 0.15);
      const double bt = rng.uniform(0.025, 0.06);
      const double bh = rng.uniform(0.10, 0.20);
      const double at = rng.uniform(0.035, 0.07);
      const double ah = rng.uniform(0.08, 0.16);
      parts.push_back(make_box({0, 0, hz}, {hx, hy, hz}));                               // base
      parts.push_back(make_box({0, -(hy - bt), 2 * hz + g + bh}, {hx, bt, bh}));         // back
      parts.push_back(make_box({-(hx + g + at), 0, ah}, {at, hy, ah}));                  // arm
      parts.push_back(make_box({hx + g + at, 0, ah}, {at, hy, ah}));                     // arm
      break;
    }
    case Category::Telephone: {
      const double bx = rng.uniform(0.38, 0.50);
      const double by = rng.uniform(0.12, 0.22);
      const double bz = rng.uniform(0.025, 0.06);
      const double hx = rng.uniform(0.24, 0.38);
      const double hy = rng.uniform(0.035, 0.07);
      const double hz = rng.uniform(0.025, 0.06);
      parts.push_back(make_box({0, 0, bz}, {bx, by, bz}));                               // base
      parts.push_back(make_box({0, 0, 2 * bz + g + hz}, {hx, hy, hz}));                  // handset
      break;
    }
    case Category::Airplane: {
      const double fx = rng.uniform(0.40, 0.50);
      const double fr = rng.uniform(0.035, 0.07);
      const double wx = rng.uniform(0.08, 0.16);
      const double wy = rng.uniform(0.13, 0.21);
      const double wt = 0.012;
      const double ft = rng.uniform(0.05, 0.10);
      const double fh = rng.uniform(0.07, 0.15);
      const double wing_x = rng.uniform(-0.08, 0.08);
      parts.push_back(make_box({0, 0, 0}, {fx, fr, fr}));                                // fuselage
      parts.push_back(make_box({wing_x, -(fr + g + wy), 0}, {wx, wy, wt}));              // wing
      parts.push_back(make_box({wing_x, fr + g + wy, 0}, {wx, wy, wt}));                 // wing
      parts.push_back(make_box({-(fx - ft), 0, fr + g + fh}, {ft, 0.012, fh}));          // fin
      break;
    }
    case Category::Rifle: {
      const double bx = rng.uniform(0.42, 0.50);
      const double br = 0.018;
      const double sx = rng.uniform(0.11, 0.19);
      const double sy = rng.uniform(0.02, 0.05);
      const double sz = rng.uniform(0.04, 0.09);
      const double gz = rng.uniform(0.04, 0.07);
      const double grip_x = rng.uniform(0.0, 0.10);
      parts.push_back(make_box({0, 0, 0}, {bx, br, br}));                                // barrel
      parts.push_back(make_box({-(bx - sx), 0, -(br + g + sz)}, {sx, sy, sz}));          // stock
      parts.push_back(make_box({grip_x, 0, -(br + g + gz)}, {0.025, 0.02, gz}));         // grip
      break;
    }
    case Category::Cabinet: {
      const double cx = rng.uniform(0.18, 0.34);
      const double cy = rng.uniform(0.12, 0.26);
      const double cz = rng.uniform(0.36, 0.48);
      parts.push_back(make_box({0, 0, cz}, {cx, cy, cz}));                               // body
      parts.push_back(make_box({0, 0, 2 * cz + g + 0.015}, {cx + 0.02, cy + 0.02, 0.015}));
      break;
    }
  }
  return parts;
}

}  // namespace

std::string to_string(Category c) {
  switch (c) {
    case Category::Chair: return "chair";
    case Category::Sofa: return "sofa";
    case Category::Telephone: return "telephone";
    case Category::Airplane: return "airplane";
    case Category::Rifle: return "rifle";
    case Category::Cabinet: return "cabinet";
  }
  return "chair";
}

Category category_from_string(const std::string& s) {
  for (int i = 0; i < kNumCategories; ++i) {
    const Category c = static_cast<Category>(i);
    if (to_string(c) == s) return c;
  }
  throw InvalidArgument("unknown category: " + s);
}

ShapeTemplate gen_template(Category category, std::uint64_t seed) {
  Rng dims_rng(derive_seed(seed, {static_cast<std::uint64_t>(category), 0xd1}));
  const std::vector<Part> parts = design_parts(category, dims_rng);

  double cell = kSampleCell;
  std::vector<Vec3> pts;
  std::vector<std::uint16_t> ids;
  for (int attempt = 0; attempt < 4; ++attempt) {
    pts.clear();
    ids.clear();
    Rng sample_rng(derive_seed(seed, {static_cast<std::uint64_t>(category), 0x5a}));
    for (std::size_t pi = 0; pi < parts.size(); ++pi) {
      const std::size_t before = pts.size();
      if (parts[pi].is_box)
        sample_box(parts[pi].box, cell, sample_rng, pts);
      else
        sample_cylinder(parts[pi].cyl, cell, sample_rng, pts);
      ids.insert(ids.end(), pts.size() - before, static_cast<std::uint16_t>(pi));
    }
    if (pts.size() >= kMinTemplatePoints) break;
    cell *= std::sqrt(static_cast<double>(pts.size()) / (kMinTemplatePoints + 256.0));
  }

  PointCloud cloud;
  cloud.points = std::move(pts);
  auto [normalized, transform] = normalize_to_unit(cloud);

  double area = 0.0;
  for (const Part& p : parts) area += part_area(p);

  ShapeTemplate tpl;
  tpl.category = category;
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%s_%06llu", to_string(category).c_str(),
                static_cast<unsigned long long>(seed));
  tpl.template_id = buf;
  tpl.surface_points = std::move(normalized);
  tpl.part_ids = std::move(ids);
  tpl.part_count = static_cast<std::uint16_t>(parts.size());
  tpl.surface_area = area * transform.uniform_scale * transform.uniform_scale;
  return tpl;
}

std::vector<std::uint32_t> render_partial_indices(const std::vector<Vec3>& points,
                                                  const CameraConfig& cam) {
  if (cam.fov_deg <= 0.0 || cam.fov_deg >= 180.0)
    throw InvalidArgument("render_partial: degenerate camera fov");
  if (cam.resolution < 1) throw InvalidArgument("render_partial: zero resolution");
  const double deg = kPi / 180.0;
  const double pitch = cam.pitch_deg * deg, azim = cam.azimuth_deg * deg;
  const Vec3 pos{cam.distance * std::cos(pitch) * std::cos(azim),
                 cam.distance * std::cos(pitch) * std::sin(azim),
                 cam.distance * std::sin(pitch)};
  const Vec3 fwd = (pos * -1.0).normalized();
  Vec3 right = fwd.cross(Vec3{0, 0, 1});
  const double rn = right.norm();
  if (rn < 1e-12) throw InvalidArgument("render_partial: camera looks along +z");
  right = right / rn;
  const Vec3 up = right.cross(fwd);
  const double tan_half = std::tan(0.5 * cam.fov_deg * deg);

  const std::uint32_t res = cam.resolution;
  std::vector<double> depth(static_cast<std::size_t>(res) * res,
                            std::numeric_limits<double>::infinity());
  std::vector<std::int64_t> winner(static_cast<std::size_t>(res) * res, -1);
  for (std::uint32_t i = 0; i < points.size(); ++i) {
    const Vec3 d = points[i] - pos;
    const double zc = d.dot(fwd);
    if (zc <= 1e-9) continue;
    const double xn = d.dot(right) / (zc * tan_half);
    const double yn = d.dot(up) / (zc * tan_half);
    if (xn <= -1.0 || xn >= 1.0 || yn <= -1.0 || yn >= 1.0) continue;
    const std::uint32_t px = std::min(res - 1, static_cast<std::uint32_t>((xn + 1.0) * 0.5 * res));
    const std::uint32_t py = std::min(res - 1, static_cast<std::uint32_t>((yn + 1.0) * 0.5 * res));
    const std::size_t cell = static_cast<std::size_t>(py) * res + px;
    if (zc < depth[cell]) {
      depth[cell] = zc;
      winner[cell] = i;
    }
  }
  std::vector<std::uint32_t> kept;
  for (const std::int64_t w : winner)
    if (w >= 0) kept.push_back(static_cast<std::uint32_t>(w));
  std::sort(kept.begin(), kept.end());
  return kept;
}

PointCloud render_partial(const ShapeTemplate& tpl, const CameraConfig& cam) {
  if (tpl.surface_points.empty()) throw InvalidArgument("render_partial: empty template");
  const auto kept = render_partial_indices(tpl.surface_points.points, cam);
  PointCloud out;
  out.points.reserve(kept.size());
  for (const std::uint32_t i : kept) out.points.push_back(tpl.surface_points.points[i]);
  return out;
}

std::vector<CameraConfig> template_view_configs(const ShapeTemplate& tpl,
                                                const CameraConfig& base) {
  std::vector<std::uint8_t> id_bytes(tpl.template_id.begin(), tpl.template_id.end());
  Rng rng(fnv1a64(id_bytes));
  std::vector<CameraConfig> views(12, base);
  for (CameraConfig& v : views) {
    v.pitch_deg = rng.uniform(0.0, 30.0);
    v.azimuth_deg = rng.uniform(-180.0, 180.0);
  }
  return views;
}

std::vector<std::uint32_t> fuse_view_indices(const ShapeTemplate& tpl, std::uint32_t n_views,
                                             std::uint64_t seed, const CameraConfig& base) {
  if (n_views < 1 || n_views > 12)
    throw InvalidArgument("fuse_views: n_views must be in [1, 12]");
  const auto views = template_view_configs(tpl, base);
  Rng rng(seed);
  const auto chosen = rng.sample_without_replacement(12, n_views);
  std::vector<std::uint32_t> merged;
  for (const std::uint32_t vi : chosen) {
    const auto kept = render_partial_indices(tpl.surface_points.points, views[vi]);
    merged.insert(merged.end(), kept.begin(), kept.end());
  }
  std::sort(merged.begin(), merged.end());
  merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
  return merged;
}

PointCloud fuse_views(const ShapeTemplate& tpl, std::uint32_t n_views, std::uint64_t seed,
                      const CameraConfig& base) {
  const auto kept = fuse_view_indices(tpl, n_views, seed, base);
  PointCloud out;
  out.points.reserve(kept.size());
  for (const std::uint32_t i : kept) out.points.push_back(tpl.surface_points.points[i]);
  return out;
}

PretrainSample make_pretrain_sample(const ShapeTemplate& tpl, std::uint64_t seed,
                                    const CameraConfig& base) {
  Rng rng(derive_seed(seed, {0x9e}));
  const std::uint32_t n_views = 3 + static_cast<std::uint32_t>(rng.uniform_index(4));
  PointCloud object = fuse_views(tpl, n_views, derive_seed(seed, {0xf1}), base);
  const double scale = rng.uniform(0.8, 1.5);
  for (Vec3& p : object.points) p = p * scale;

  // rest the object on z=0, xy bbox centered on the origin
  const Bbox box = bounding_box(object.points);
  const Vec3 shift{-(box.lo.x + box.hi.x) * 0.5, -(box.lo.y + box.hi.y) * 0.5, -box.lo.z};
  for (Vec3& p : object.points) p += shift;

  // enclosing container, centered near the object
  const double jx = rng.uniform(-0.15, 0.15), jy = rng.uniform(-0.15, 0.15);
  double max_r = 0.0, obj_top = 0.0;
  for (const Vec3& p : object.points) {
    const double dx = p.x - jx, dy = p.y - jy;
    max_r = std::max(max_r, std::sqrt(dx * dx + dy * dy));
    obj_top = std::max(obj_top, p.z);
  }
  ContainerPose pose;
  pose.cx = jx;
  pose.cy = jy;
  pose.radius = max_r * rng.uniform(1.15, 2.2);
  pose.z_min = 0.0;
  pose.z_max = obj_top * rng.uniform(1.05, 1.6);

  const std::size_t n_obj = object.size();
  const double ratio = rng.uniform(0.5, 2.0);
  std::size_t n_plane = static_cast<std::size_t>(std::lround(static_cast<double>(n_obj) * ratio));
  n_plane = std::min(std::max<std::size_t>(n_plane, (n_obj + 1) / 2), 2 * n_obj);

  const int n_walls = 1 + static_cast<int>(rng.uniform_index(2));
  const double wall_frac = rng.uniform(0.2, 0.6);
  const std::size_t n_wall_total = static_cast<std::size_t>(n_plane * wall_frac);
  const std::size_t n_floor = n_plane - n_wall_total;

  PretrainSample sample;
  sample.cloud.points = object.points;
  sample.labels.assign(n_obj, 1);
  sample.pose = pose;

  // floor disk inside the container
  for (std::size_t i = 0; i < n_floor; ++i) {
    const double r = pose.radius * std::sqrt(rng.uniform());
    const double a = rng.uniform(0.0, 2.0 * kPi);
    sample.cloud.points.push_back({pose.cx + r * std::cos(a), pose.cy + r * std::sin(a), 0.0});
    sample.labels.push_back(0);
  }
  // vertical wall strips clipped to the container, kept clear of the object
  // the way room walls sit beside furniture
  const double wall_frac_lo = std::min(1.05 * max_r / pose.radius, 0.85);
  for (int w = 0; w < n_walls; ++w) {
    const std::size_t count = w + 1 == n_walls ? n_wall_total - (n_wall_total / n_walls) * w
                                               : n_wall_total / n_walls;
    const double dist = rng.uniform(wall_frac_lo, 0.95) * pose.radius;
    const double phi = rng.uniform(0.0, 2.0 * kPi);
    const Vec3 normal{std::cos(phi), std::sin(phi), 0.0};
    const Vec3 tangent{-std::sin(phi), std::cos(phi), 0.0};
    const double chord = std::sqrt(std::max(pose.radius * pose.radius - dist * dist, 1e-12));
    const Vec3 foot{pose.cx + normal.x * dist, pose.cy + normal.y * dist, 0.0};
    for (std::size_t i = 0; i < count; ++i) {
      const double t = rng.uniform(-chord, chord);
      const double z = rng.uniform(0.0, pose.z_max);
      sample.cloud.points.push_back({foot.x + tangent.x * t, foot.y + tangent.y * t, z});
      sample.labels.push_back(0);
    }
  }
  return sample;
}

ShapeLibrary build_library(const std::vector<Category>& categories, std::uint32_t per_category,
                           std::uint64_t seed) {
  if (per_category < 2) throw InvalidArgument("build_library: per_category must be >= 2");
  ShapeLibrary lib;
  for (const Category cat : categories) {
    for (std::uint32_t k = 0; k < 2 * per_category; ++k) {
      // template seed parity decides the pool; the base offset keeps parity
      // equal to k's parity for any global seed
      const std::uint64_t tseed = 2ULL * per_category * seed + k;
      ShapeTemplate tpl = gen_template(cat, tseed);
      tpl.test_pool = (tseed % 2) == 1;
      (tpl.test_pool ? lib.test : lib.train).push_back(std::move(tpl));
    }
  }
  return lib;
}

const ShapeTemplate* find_template(const std::vector<ShapeTemplate>& pool, const std::string& id) {
  for (const ShapeTemplate& t : pool)
    if (t.template_id == id) return &t;
  return nullptr;
}

}  // namespace evobj
