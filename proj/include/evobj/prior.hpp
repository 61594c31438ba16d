#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evobj/geometry.hpp"
#include "evobj/kdtree.hpp"
#include "evobj/shapes.hpp"

namespace evobj {

struct PriorConfig {
  std::uint32_t yaw_bins = 36;
  double cd_threshold = 0.10;        // delta_c, strict "below"
  double tau = 0.05;                 // score temperature
  std::uint32_t completed_points = 1024;
  std::uint32_t retrieval_query_cap = 128;  // stride cap on query points
  std::uint32_t template_index_cap = 2048;  // per-template index size
  // Ablation switch. Off removes the retrieval-and-align machinery: the
  // scorer falls back to a symmetric match against the priors at identity
  // yaw, the way an unaligned reconstruction check would behave.
  bool completion = true;
};

// Read-only shape prior: per-template KD index over a capped sample plus the
// full canonical points for emitting completions.
class PriorLibrary {
 public:
  struct Entry {
    std::string template_id;
    Category category = Category::Chair;
    std::vector<Vec3> full_points;
    std::vector<Vec3> index_points;    // capped, what retrieval matches against
    std::vector<Vec3> reverse_points;  // small stride sample for symmetric search
    KdTree tree;
  };

  PriorLibrary(const std::vector<ShapeTemplate>& templates, const PriorConfig& cfg);

  const PriorConfig& config() const { return cfg_; }
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

 private:
  PriorConfig cfg_;
  std::vector<Entry> entries_;
};

struct CompletionResult {
  PointCloud completed;      // exactly completed_points, scene frame
  std::string template_id;
  std::uint32_t template_index = 0;
  std::uint32_t yaw_index = 0;
  RigidTransform transform;  // canonical template frame -> scene frame
  double fit = 0.0;          // selection value in the normalized frame
};

// Retrieval-and-align: normalizes the partial, scans every (template, yaw
// bin) with a one-sided partial-to-template Chamfer over a stride-capped
// query set, and maps the winner's canonical sample back to the scene frame.
// Ties go to the lowest template_id, then the lowest yaw index.
CompletionResult complete_candidate(const PointCloud& partial, const PriorLibrary& library);

struct ObjectnessResult {
  double score = 0.0;  // exp(-cd/tau)
  double cd = 0.0;
  bool valid = false;
  CompletionResult completion;
};

// The validity predicate in one place: strict cd < delta_c.
bool objectness_valid(double cd, double cd_threshold);
double objectness_score_value(double cd, double tau);

ObjectnessResult objectness_score(const PointCloud& candidate, const PriorLibrary& library);

// Step reward: clipped score improvement, plus +1 when a terminal step holds
// a valid candidate.
double reward_from_score(const ObjectnessResult& result, double prev_best, bool terminal);

}  // namespace evobj
