#include <cmath>

#include "doctest.h"
#include "evobj/prior.hpp"
#include "evobj/rng.hpp"

using namespace evobj;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<ShapeTemplate> tiny_pool() {
  static const std::vector<ShapeTemplate> pool = [] {
    std::vector<ShapeTemplate> out;
    out.push_back(gen_template(Category::Chair, 0));
    out.push_back(gen_template(Category::Sofa, 2));
    out.push_back(gen_template(Category::Telephone, 4));
    out.push_back(gen_template(Category::Cabinet, 6));
    return out;
  }();
  return pool;
}

PointCloud rotate_cloud(const PointCloud& cloud, double yaw) {
  PointCloud out;
  const double c = std::cos(yaw), s = std::sin(yaw);
  for (const Vec3& p : cloud.points) out.points.push_back({c * p.x - s * p.y, s * p.x + c * p.y, p.z});
  return out;
}

}  // namespace

TEST_CASE("complete_candidate on an exact template") {
  const auto pool = tiny_pool();
  PriorConfig cfg;
  cfg.template_index_cap = 1 << 20;  // uncapped: an exact match has fit 0
  cfg.retrieval_query_cap = 1 << 20;
  const PriorLibrary lib(pool, cfg);

  // the unrotated template retrieves itself at yaw bin 0 with fit ~0
  const PointCloud exact = pool[0].surface_points;
  const CompletionResult res = complete_candidate(exact, lib);
  CHECK(res.template_id == pool[0].template_id);
  CHECK(res.yaw_index == 0);
  CHECK(res.fit < 1e-9);
  CHECK(res.completed.size() == cfg.completed_points);

  // rotating by an exact quarter-turn bin shifts only the yaw index
  const std::uint32_t quarter = cfg.yaw_bins / 4;  // 90 degrees
  const PointCloud rotated = rotate_cloud(exact, 2.0 * kPi * quarter / cfg.yaw_bins);
  const CompletionResult rres = complete_candidate(rotated, lib);
  CHECK(rres.template_id == res.template_id);
  CHECK(rres.yaw_index == quarter);
  CHECK(std::abs(rres.fit - res.fit) < 1e-9);

  CHECK_THROWS_AS(complete_candidate(PointCloud{.points = {{0, 0, 0}}}, lib),
                  CandidateTooSmall);
  PointCloud degenerate;
  for (int i = 0; i < 10; ++i) degenerate.points.push_back({1, 1, 1});
  CHECK_THROWS_AS(complete_candidate(degenerate, lib), DegenerateInput);
}

TEST_CASE("retrieval is invariant to translation and uniform scale") {
  const auto pool = tiny_pool();
  const PriorLibrary lib(pool, PriorConfig{});
  PointCloud fused = fuse_views(pool[1], 3, 5, CameraConfig{2.0, 0, 0, 40.0, 128});
  const CompletionResult base = complete_candidate(fused, lib);

  PointCloud moved = fused;
  for (Vec3& p : moved.points) p = p * 3.5 + Vec3{10.0, -4.0, 2.0};
  const CompletionResult res = complete_candidate(moved, lib);
  CHECK(res.template_id == base.template_id);
  CHECK(res.yaw_index == base.yaw_index);
  CHECK(std::abs(res.fit - base.fit) < 1e-9);
}

TEST_CASE("fit minimality against the exhaustive oracle") {
  const auto pool = tiny_pool();
  PriorConfig cfg;
  cfg.yaw_bins = 12;
  const PriorLibrary lib(pool, cfg);
  Rng rng(3);
  for (int trial = 0; trial < 3; ++trial) {
    const PointCloud fused =
        fuse_views(pool[trial % pool.size()], 2, 100 + trial, CameraConfig{2.0, 0, 0, 40.0, 128});
    const CompletionResult res = complete_candidate(fused, lib);
    // oracle: the same stride-capped queries against every (template, yaw)
    auto [normalized, t] = normalize_to_unit(fused);
    std::vector<Vec3> queries;
    const std::size_t stride =
        normalized.size() <= cfg.retrieval_query_cap
            ? 1
            : (normalized.size() + cfg.retrieval_query_cap - 1) / cfg.retrieval_query_cap;
    for (std::size_t i = 0; i < normalized.size(); i += stride)
      queries.push_back(normalized.points[i]);
    for (std::size_t ti = 0; ti < lib.size(); ++ti) {
      for (std::uint32_t b = 0; b < cfg.yaw_bins; ++b) {
        const double theta = 2.0 * kPi * b / cfg.yaw_bins;
        double sum = 0.0;
        for (const Vec3& q : queries) {
          // rotate the query into the canonical frame (inverse yaw)
          const Vec3 qr{std::cos(theta) * q.x + std::sin(theta) * q.y,
                        -std::sin(theta) * q.x + std::cos(theta) * q.y, q.z};
          double best = 1e300;
          for (const Vec3& tp : lib.entries()[ti].index_points)
            best = std::min(best, dist(qr, tp));
          sum += best;
        }
        const double value = sum / static_cast<double>(queries.size());
        CHECK(res.fit <= value + 1e-12);
      }
    }
  }
}

TEST_CASE("objectness score, validity boundary, and monotonicity") {
  const auto pool = tiny_pool();
  PriorConfig cfg;
  const PriorLibrary lib(pool, cfg);

  // exact template: cd ~ 0, score ~ 1, valid
  const ObjectnessResult res = objectness_score(pool[2].surface_points, lib);
  CHECK(res.cd < 0.01);
  CHECK(res.score > 0.8);
  CHECK(res.valid);

  // validity is exactly cd < delta_c, strict at the boundary
  for (const double cd : {0.0, 0.05, 0.08, 0.0999999, 0.1, 0.1000001, 0.12, 5.0}) {
    CHECK(objectness_valid(cd, 0.1) == (cd < 0.1));
  }
  CHECK_FALSE(objectness_valid(0.1, 0.1));  // "below", not "at"

  // score monotonicity: cd1 < cd2 implies score1 > score2
  Rng rng(8);
  for (int i = 0; i < 50; ++i) {
    const double cd1 = rng.uniform(0.0, 0.5);
    const double cd2 = cd1 + rng.uniform(1e-9, 0.5);
    CHECK(objectness_score_value(cd1, 0.05) > objectness_score_value(cd2, 0.05));
  }
  // fixed arithmetic: cd = tau gives exp(-1)
  CHECK(objectness_score_value(0.05, 0.05) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
}

TEST_CASE("reward_from_score shaping") {
  ObjectnessResult good;
  good.score = 0.8;
  good.valid = true;
  ObjectnessResult weak;
  weak.score = 0.3;
  weak.valid = false;

  CHECK(reward_from_score(weak, 0.5, false) == 0.0);            // no improvement
  CHECK(reward_from_score(good, 0.5, false) == doctest::Approx(0.3));
  CHECK(reward_from_score(good, 0.5, true) == doctest::Approx(1.3));  // terminal bonus
  CHECK(reward_from_score(weak, 0.5, true) == 0.0);             // invalid: no bonus
  CHECK_THROWS_AS(reward_from_score(good, 1.5, false), InvalidArgument);

  // full-episode return against a hand-summed oracle
  const double scores[] = {0.1, 0.4, 0.3, 0.7, 0.9};
  double prev = 0.0, total = 0.0;
  for (int t = 0; t < 5; ++t) {
    ObjectnessResult r;
    r.score = scores[t];
    r.valid = t == 4;
    total += reward_from_score(r, prev, t == 4);
    prev = std::max(prev, scores[t]);
  }
  // oracle: max(0, .1-0) + max(0, .4-.1) + 0 + max(0, .7-.4) + max(0, .9-.7) + 1
  CHECK(total == doctest::Approx(0.1 + 0.3 + 0.0 + 0.3 + 0.2 + 1.0));
}

TEST_CASE("no-completion mode loses the yaw alignment") {
  const auto pool = tiny_pool();
  PriorConfig sym_cfg;
  sym_cfg.completion = false;
  const PriorLibrary no_comp(pool, sym_cfg);
  const PriorLibrary full(pool, PriorConfig{});

  // rotated occluded partials: alignment recovers the fit, its absence does not
  double cd_full_sum = 0.0, cd_none_sum = 0.0;
  int n = 0;
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    PointCloud partial =
        fuse_views(pool[seed % pool.size()], 3, seed, CameraConfig{2.0, 0, 0, 40.0, 128});
    if (partial.size() < 8) continue;
    partial = rotate_cloud(partial, 0.45 + 0.3 * seed);
    const ObjectnessResult with_alignment = objectness_score(partial, full);
    const ObjectnessResult without = objectness_score(partial, no_comp);
    CHECK(without.completion.yaw_index == 0);  // no yaw search
    cd_full_sum += with_alignment.cd;
    cd_none_sum += without.cd;
    ++n;
  }
  REQUIRE(n > 0);
  CHECK(cd_full_sum < cd_none_sum);
}

TEST_CASE("library construction validates config") {
  const auto pool = tiny_pool();
  PriorConfig bad;
  bad.yaw_bins = 0;
  CHECK_THROWS_AS(PriorLibrary(pool, bad), InvalidArgument);
  PriorConfig bad2;
  bad2.cd_threshold = 0.0;
  CHECK_THROWS_AS(PriorLibrary(pool, bad2), InvalidArgument);
  CHECK_THROWS_AS(PriorLibrary({}, PriorConfig{}), InvalidArgument);
}
