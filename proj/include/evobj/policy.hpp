#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "evobj/discern.hpp"
#include "evobj/prior.hpp"
#include "evobj/rng.hpp"
#include "evobj/scenegen.hpp"

namespace evobj {

// occupancy (log), 8 height bins, 4 radial rings, pose (3), previous best
constexpr int kObsDim = 1 + 8 + 4 + 3 + 1;

struct AgentObservation {
  std::array<double, kObsDim> v{};
};

enum class AgentAction : std::uint8_t {
  MovePosX = 0,
  MoveNegX,
  MovePosY,
  MoveNegY,
  GrowRadius,
  ShrinkRadius,
  RecenterOnMass,
  Terminate,
};
constexpr int kNumActions = 8;

constexpr double kMoveStepFraction = 0.1;    // of the floor extent
constexpr double kSpawnRadiusFraction = 0.15;
constexpr double kGrowFactor = 1.25;
constexpr double kShrinkFactor = 0.8;

struct PolicyParams {
  Mlp actor;   // kObsDim -> kNumActions logits
  Mlp critic;  // kObsDim -> 1
};

PolicyParams make_policy(std::uint64_t seed);

struct ActResult {
  std::array<double, kNumActions> probs{};
  double value = 0.0;
};

ActResult policy_act(const PolicyParams& params, const AgentObservation& obs);
AgentAction sample_action(const ActResult& act, Rng& rng);

AgentObservation observe(const Scene& scene, const ContainerPose& pose,
                         const CandidateSubset& subset, double prev_best);

// The container-agent environment over one scene.
class ContainerEnv {
 public:
  ContainerEnv(const Scene& scene, const DiscernModel& model, const PriorLibrary& prior,
               std::uint32_t horizon, std::uint32_t min_candidate_points,
               double mask_snap = 0.08);

  AgentObservation reset(std::uint64_t seed);

  struct StepResult {
    AgentObservation obs;
    double reward = 0.0;
    bool done = false;
    // stage outputs, for pseudo-label accumulation and replay checks
    double score = 0.0;
    double cd = 0.0;
    bool valid = false;
    CandidateSubset subset;
    std::vector<std::uint8_t> fg_flags;         // discern mask, per subset point
    std::vector<std::uint32_t> foreground;      // parent indices, sorted
    // completion-explained mask for valid candidates: subset points within
    // mask_snap of the completed shape; this is what the ledger stores
    std::vector<std::uint8_t> refined_flags;
    std::vector<std::uint32_t> refined_mask;
  };

  StepResult step(AgentAction action);

  const ContainerPose& pose() const { return pose_; }
  double prev_best() const { return prev_best_; }
  std::uint32_t steps_taken() const { return step_; }

 private:
  const Scene& scene_;
  const DiscernModel& model_;
  const PriorLibrary& prior_;
  ContainerPose pose_;
  double prev_best_ = 0.0;
  std::uint32_t step_ = 0;
  std::uint32_t horizon_;
  std::uint32_t min_points_;
  double mask_snap_;
  bool done_ = true;
};

// Convenience wrappers matching the operation names.
std::pair<ContainerPose, AgentObservation> env_reset(const Scene& scene, std::uint64_t seed);

struct PseudoLabel {
  std::uint32_t scene_id = 0;
  ContainerPose pose;
  std::vector<std::uint32_t> subset_indices;  // container crop, parent indices
  std::vector<std::uint8_t> fg_flags;         // per subset point
  std::vector<std::uint32_t> mask;            // foreground parent indices
  double score = 0.0;
  std::uint32_t epoch = 0;
  bool used = false;
};

enum class LedgerOutcome { Added, Replaced, Rejected };

struct Ledger {
  std::vector<PseudoLabel> entries;

  std::size_t size() const { return entries.size(); }
  std::size_t unused_count() const;
};

// Appends a valid candidate; near-duplicates (same scene, mask IoU >
// dedup_iou) keep only the higher score. Invalid candidates are rejected.
LedgerOutcome accumulate_pseudo_label(Ledger& ledger, PseudoLabel label, bool valid,
                                      double dedup_iou);

std::string ledger_to_json(const Ledger& ledger);
Ledger ledger_from_json(const std::string& text);

struct DiscoveryConfig {
  std::uint32_t epochs = 500;
  std::uint32_t episodes_per_scene = 1;
  std::uint32_t horizon = 10;
  std::uint32_t evolve_interval = 100;  // T; > epochs disables evolving
  double ppo_clip = 0.2;
  std::uint32_t ppo_epochs = 4;
  double entropy_weight = 0.01;
  double value_weight = 0.5;
  double lr = 1e-4;
  double gamma = 1.0;
  double dedup_iou = 0.9;
  std::uint32_t min_candidate_points = 8;
  // pseudo-label masks snap to the completed shape at this point distance
  double mask_snap = 0.08;
  bool diagnostics = true;
  std::uint32_t diagnostics_interval = 5;  // discern-accuracy cadence
  std::uint32_t workers = 1;
  TrainConfig evolve{1e-3, 1e-4, 32, 40, 180.0, 0.9, 1.1, 0};
};

struct TrajectoryStep {
  AgentObservation obs;
  std::uint8_t action = 0;
  double logp_old = 0.0;
  double value_old = 0.0;
  double reward = 0.0;
  bool episode_start = false;
};

// Monte-Carlo returns within each episode (gamma-discounted).
std::vector<double> trajectory_returns(const std::vector<TrajectoryStep>& steps, double gamma);

// Returns minus the old value baseline, normalized to zero mean and unit
// variance per batch (left as-is when the spread vanishes).
std::vector<double> normalized_advantages(const std::vector<TrajectoryStep>& steps,
                                          const std::vector<double>& returns);

// Mean loss and analytic gradient of the clipped surrogate plus entropy
// bonus over a batch; loss = mean_i [ppo_loss_i - entropy_weight * H_i].
double ppo_actor_loss(const Mlp& actor, const std::vector<TrajectoryStep>& steps,
                      const std::vector<double>& advantages, double clip_eps,
                      double entropy_weight);
ParamTensors ppo_actor_gradient(const Mlp& actor, const std::vector<TrajectoryStep>& steps,
                                const std::vector<double>& advantages, double clip_eps,
                                double entropy_weight);

// Mean loss and gradient of value_weight * (V(s) - G)^2.
double value_loss(const Mlp& critic, const std::vector<TrajectoryStep>& steps,
                  const std::vector<double>& returns, double value_weight);
ParamTensors value_gradient(const Mlp& critic, const std::vector<TrajectoryStep>& steps,
                            const std::vector<double>& returns, double value_weight);

// Clipped-surrogate update with value and entropy terms; advantages are
// Monte-Carlo returns minus the old value baseline, normalized per batch.
void ppo_update(PolicyParams& params, const std::vector<TrajectoryStep>& steps,
                const DiscoveryConfig& cfg, AdamState& actor_state, AdamState& critic_state);

struct EpochLog {
  std::uint32_t epoch = 0;
  double mean_reward = 0.0;
  std::uint64_t ledger_size = 0;
  bool evolve_event = false;
  std::optional<double> sufficiency;
  std::optional<double> discern_accuracy;
};

struct DiscoveryResult {
  PolicyParams policy;
  DiscernModel discern;
  Ledger ledger;
  std::vector<EpochLog> log;
};

// Algorithm-1 orchestration: rollouts over every scene, PPO update per
// epoch, pseudo-label accumulation, discern evolving every evolve_interval
// epochs, and per-epoch diagnostics when ground truth is present.
DiscoveryResult run_discovery(const std::vector<Scene>& scenes, const DiscernModel& model,
                              const PriorLibrary& prior, const DiscoveryConfig& cfg,
                              std::uint64_t seed);

// Extracts unused ledger entries as container-frame crops, marks them used,
// and fine-tunes the model. Empty unused set -> NoOp.
EvolveStatus evolve_on_ledger(DiscernModel& model, Ledger& ledger,
                              const std::vector<Scene>& scenes, const TrainConfig& cfg,
                              std::uint64_t seed);

}  // namespace evobj
