#include "evobj/policy.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "evobj/eval.hpp"
#include "json.hpp"

namespace evobj {

namespace {

double safe_log(double p) { return std::log(std::max(p, 1e-300)); }

}  // namespace

PolicyParams make_policy(std::uint64_t seed) {
  PolicyParams p;
  p.actor = make_mlp({kObsDim, 64, 64, kNumActions}, Activation::Identity,
                     derive_seed(seed, {0xac}));
  p.critic = make_mlp({kObsDim, 64, 64, 1}, Activation::Identity, derive_seed(seed, {0xc1}));
  return p;
}

ActResult policy_act(const PolicyParams& params, const AgentObservation& obs) {
  const std::vector<double> x(obs.v.begin(), obs.v.end());
  const std::vector<double> logits = mlp_forward(params.actor, x);
  ActResult r;
  double max_logit = logits[0];
  for (const double l : logits) max_logit = std::max(max_logit, l);
  double sum = 0.0;
  for (int a = 0; a < kNumActions; ++a) {
    r.probs[a] = std::exp(logits[a] - max_logit);
    sum += r.probs[a];
  }
  for (int a = 0; a < kNumActions; ++a) r.probs[a] /= sum;
  r.value = mlp_forward(params.critic, x)[0];
  return r;
}

AgentAction sample_action(const ActResult& act, Rng& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  for (int a = 0; a < kNumActions; ++a) {
    cum += act.probs[a];
    if (u < cum) return static_cast<AgentAction>(a);
  }
  return AgentAction::Terminate;
}

AgentObservation observe(const Scene& scene, const ContainerPose& pose,
                         const CandidateSubset& subset, double prev_best) {
  AgentObservation obs;
  const std::size_t k = subset.size();
  obs.v[0] = std::log1p(static_cast<double>(k));
  if (k > 0) {
    const double z_span = std::max(pose.z_max - pose.z_min, 1e-12);
    const double inv_k = 1.0 / static_cast<double>(k);
    for (const Vec3& p : subset.points) {
      const int hb = std::min(7, std::max(0, static_cast<int>((p.z - pose.z_min) / z_span * 8.0)));
      obs.v[1 + hb] += inv_k;
      const double r = std::hypot(p.x - pose.cx, p.y - pose.cy) / pose.radius;
      const int rb = std::min(3, static_cast<int>(r * 4.0));
      obs.v[9 + rb] += inv_k;
    }
  }
  const double extent = scene.floor_extent();
  obs.v[13] = pose.cx / std::max(scene.floor_w, 1e-12);
  obs.v[14] = pose.cy / std::max(scene.floor_d, 1e-12);
  obs.v[15] = pose.radius / std::max(extent, 1e-12);
  obs.v[16] = prev_best;
  return obs;
}

ContainerEnv::ContainerEnv(const Scene& scene, const DiscernModel& model,
                           const PriorLibrary& prior, std::uint32_t horizon,
                           std::uint32_t min_candidate_points, double mask_snap)
    : scene_(scene), model_(model), prior_(prior), horizon_(horizon),
      min_points_(min_candidate_points), mask_snap_(mask_snap) {}

AgentObservation ContainerEnv::reset(std::uint64_t seed) {
  Rng rng(seed);
  pose_.cx = rng.uniform(0.0, scene_.floor_w);
  pose_.cy = rng.uniform(0.0, scene_.floor_d);
  pose_.radius = kSpawnRadiusFraction * scene_.floor_extent();
  pose_.z_min = 0.0;
  pose_.z_max = scene_.wall_height;
  prev_best_ = 0.0;
  step_ = 0;
  done_ = false;
  return observe(scene_, pose_, crop_cylinder(scene_.cloud, pose_), prev_best_);
}

ContainerEnv::StepResult ContainerEnv::step(AgentAction action) {
  if (done_) throw InvalidArgument("ContainerEnv::step: episode already done");
  const double extent = scene_.floor_extent();
  const double move = kMoveStepFraction * extent;
  switch (action) {
    case AgentAction::MovePosX: pose_.cx = std::min(pose_.cx + move, scene_.floor_w); break;
    case AgentAction::MoveNegX: pose_.cx = std::max(pose_.cx - move, 0.0); break;
    case AgentAction::MovePosY: pose_.cy = std::min(pose_.cy + move, scene_.floor_d); break;
    case AgentAction::MoveNegY: pose_.cy = std::max(pose_.cy - move, 0.0); break;
    case AgentAction::GrowRadius: pose_.radius = std::min(pose_.radius * kGrowFactor, 2.0 * extent); break;
    case AgentAction::ShrinkRadius: pose_.radius = std::max(pose_.radius * kShrinkFactor, 1e-4 * extent); break;
    case AgentAction::RecenterOnMass: {
      const CandidateSubset cur = crop_cylinder(scene_.cloud, pose_);
      if (!cur.empty()) {
        double sx = 0.0, sy = 0.0;
        for (const Vec3& p : cur.points) {
          sx += p.x;
          sy += p.y;
        }
        pose_.cx = sx / static_cast<double>(cur.size());
        pose_.cy = sy / static_cast<double>(cur.size());
      }
      break;
    }
    case AgentAction::Terminate: break;
  }
  step_ += 1;
  done_ = action == AgentAction::Terminate || step_ >= horizon_;

  StepResult out;
  out.done = done_;
  out.subset = crop_cylinder(scene_.cloud, pose_);
  if (!out.subset.empty()) {
    const auto probs = discern_predict(model_, out.subset, pose_);
    const auto fg_local = binarize_mask(probs, model_.theta);
    out.fg_flags.assign(out.subset.size(), 0);
    out.foreground.reserve(fg_local.size());
    for (const std::uint32_t li : fg_local) {
      out.fg_flags[li] = 1;
      out.foreground.push_back(out.subset.parent_indices[li]);
    }
  }

  ObjectnessResult objectness;
  if (out.foreground.size() >= min_points_) {
    PointCloud candidate;
    candidate.points.reserve(out.foreground.size());
    for (std::uint32_t i = 0; i < out.subset.size(); ++i)
      if (out.fg_flags[i]) candidate.points.push_back(out.subset.points[i]);
    try {
      objectness = objectness_score(candidate, prior_);
    } catch (const DegenerateInput&) {
      objectness = ObjectnessResult{};
    } catch (const CandidateTooSmall&) {
      objectness = ObjectnessResult{};
    }
  }
  out.score = objectness.score;
  out.cd = objectness.cd;
  out.valid = objectness.valid;
  if (objectness.valid) {
    // the completed shape explains the candidate's full extent: subset
    // points near it join the pseudo-label foreground, recovering what the
    // discern mask missed (the appendix mask-from-completion rule); the
    // discern mask itself is kept, so the label is the union
    KdTree completed_tree(objectness.completion.completed.points);
    out.refined_flags = out.fg_flags;
    for (std::uint32_t i = 0; i < out.subset.size(); ++i) {
      if (!out.refined_flags[i] &&
          completed_tree.nearest(out.subset.points[i]).distance < mask_snap_)
        out.refined_flags[i] = 1;
    }
    for (std::uint32_t i = 0; i < out.subset.size(); ++i)
      if (out.refined_flags[i]) out.refined_mask.push_back(out.subset.parent_indices[i]);
  }
  out.reward = reward_from_score(objectness, prev_best_, done_);
  prev_best_ = std::max(prev_best_, objectness.score);
  out.obs = observe(scene_, pose_, out.subset, prev_best_);
  return out;
}

std::pair<ContainerPose, AgentObservation> env_reset(const Scene& scene, std::uint64_t seed) {
  Rng rng(seed);
  ContainerPose pose;
  pose.cx = rng.uniform(0.0, scene.floor_w);
  pose.cy = rng.uniform(0.0, scene.floor_d);
  pose.radius = kSpawnRadiusFraction * scene.floor_extent();
  pose.z_min = 0.0;
  pose.z_max = scene.wall_height;
  const AgentObservation obs = observe(scene, pose, crop_cylinder(scene.cloud, pose), 0.0);
  return {pose, obs};
}

std::size_t Ledger::unused_count() const {
  std::size_t n = 0;
  for (const PseudoLabel& e : entries)
    if (!e.used) ++n;
  return n;
}

LedgerOutcome accumulate_pseudo_label(Ledger& ledger, PseudoLabel label, bool valid,
                                      double dedup_iou) {
  if (!valid) return LedgerOutcome::Rejected;
  for (PseudoLabel& e : ledger.entries) {
    if (e.scene_id != label.scene_id) continue;
    if (mask_iou(e.mask, label.mask) > dedup_iou) {
      if (label.score > e.score) {
        e = std::move(label);
        return LedgerOutcome::Replaced;
      }
      return LedgerOutcome::Rejected;
    }
  }
  ledger.entries.push_back(std::move(label));
  return LedgerOutcome::Added;
}

std::string ledger_to_json(const Ledger& ledger) {
  nlohmann::json arr = nlohmann::json::array();
  for (const PseudoLabel& e : ledger.entries) {
    arr.push_back({{"scene_id", e.scene_id},
                   {"pose", {e.pose.cx, e.pose.cy, e.pose.radius, e.pose.z_min, e.pose.z_max}},
                   {"subset_indices", e.subset_indices},
                   {"fg_flags", e.fg_flags},
                   {"mask", e.mask},
                   {"score", e.score},
                   {"epoch", e.epoch},
                   {"used", e.used}});
  }
  return arr.dump();
}

Ledger ledger_from_json(const std::string& text) {
  Ledger ledger;
  const nlohmann::json arr = nlohmann::json::parse(text);
  for (const auto& j : arr) {
    PseudoLabel e;
    e.scene_id = j.at("scene_id").get<std::uint32_t>();
    const auto& p = j.at("pose");
    e.pose = ContainerPose{p[0].get<double>(), p[1].get<double>(), p[2].get<double>(),
                           p[3].get<double>(), p[4].get<double>()};
    e.subset_indices = j.at("subset_indices").get<std::vector<std::uint32_t>>();
    e.fg_flags = j.at("fg_flags").get<std::vector<std::uint8_t>>();
    e.mask = j.at("mask").get<std::vector<std::uint32_t>>();
    e.score = j.at("score").get<double>();
    e.epoch = j.at("epoch").get<std::uint32_t>();
    e.used = j.at("used").get<bool>();
    ledger.entries.push_back(std::move(e));
  }
  return ledger;
}

std::vector<double> trajectory_returns(const std::vector<TrajectoryStep>& steps, double gamma) {
  std::vector<double> returns(steps.size(), 0.0);
  double running = 0.0;
  for (std::size_t i = steps.size(); i-- > 0;) {
    running = steps[i].reward + gamma * running;
    returns[i] = running;
    if (steps[i].episode_start) running = 0.0;
  }
  return returns;
}

std::vector<double> normalized_advantages(const std::vector<TrajectoryStep>& steps,
                                          const std::vector<double>& returns) {
  const std::size_t n = steps.size();
  std::vector<double> adv(n);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    adv[i] = returns[i] - steps[i].value_old;
    mean += adv[i];
  }
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (const double a : adv) var += (a - mean) * (a - mean);
  const double stddev = std::sqrt(var / static_cast<double>(n));
  if (stddev > 1e-12)
    for (double& a : adv) a = (a - mean) / stddev;
  return adv;
}

namespace {

struct SoftmaxOut {
  std::array<double, kNumActions> probs{};
  double entropy = 0.0;
};

SoftmaxOut softmax_of(const std::vector<double>& logits) {
  SoftmaxOut out;
  double max_logit = logits[0];
  for (const double l : logits) max_logit = std::max(max_logit, l);
  double sum = 0.0;
  for (int a = 0; a < kNumActions; ++a) {
    out.probs[a] = std::exp(logits[a] - max_logit);
    sum += out.probs[a];
  }
  for (int a = 0; a < kNumActions; ++a) {
    out.probs[a] /= sum;
    out.entropy -= out.probs[a] * safe_log(out.probs[a]);
  }
  return out;
}

}  // namespace

double ppo_actor_loss(const Mlp& actor, const std::vector<TrajectoryStep>& steps,
                      const std::vector<double>& advantages, double clip_eps,
                      double entropy_weight) {
  double total = 0.0;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    std::vector<double> x(steps[i].obs.v.begin(), steps[i].obs.v.end());
    const SoftmaxOut soft = softmax_of(mlp_forward(actor, x));
    const double ratio = std::exp(safe_log(soft.probs[steps[i].action]) - steps[i].logp_old);
    total += ppo_loss(ratio, advantages[i], clip_eps) - entropy_weight * soft.entropy;
  }
  return total / static_cast<double>(steps.size());
}

ParamTensors ppo_actor_gradient(const Mlp& actor, const std::vector<TrajectoryStep>& steps,
                                const std::vector<double>& advantages, double clip_eps,
                                double entropy_weight) {
  const std::size_t n = steps.size();
  std::vector<std::vector<double>> inputs(n), grads(n);
  for (std::size_t i = 0; i < n; ++i) {
    inputs[i].assign(steps[i].obs.v.begin(), steps[i].obs.v.end());
    const SoftmaxOut soft = softmax_of(mlp_forward(actor, inputs[i]));
    const int act = steps[i].action;
    const double ratio = std::exp(safe_log(soft.probs[act]) - steps[i].logp_old);
    const double a_hat = advantages[i];
    // -min(r, 1+eps) A: gradient flows through r below the upper clip
    const double coeff = ratio <= 1.0 + clip_eps ? -a_hat * ratio : 0.0;
    std::vector<double> g(kNumActions, 0.0);
    for (int a = 0; a < kNumActions; ++a) {
      const double onehot = a == act ? 1.0 : 0.0;
      g[a] = coeff * (onehot - soft.probs[a]) +
             entropy_weight * soft.probs[a] * (safe_log(soft.probs[a]) + soft.entropy);
    }
    grads[i] = std::move(g);
  }
  return mlp_backward(actor, inputs, grads);
}

double value_loss(const Mlp& critic, const std::vector<TrajectoryStep>& steps,
                  const std::vector<double>& returns, double value_weight) {
  double total = 0.0;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    std::vector<double> x(steps[i].obs.v.begin(), steps[i].obs.v.end());
    const double v = mlp_forward(critic, x)[0];
    total += value_weight * (v - returns[i]) * (v - returns[i]);
  }
  return total / static_cast<double>(steps.size());
}

ParamTensors value_gradient(const Mlp& critic, const std::vector<TrajectoryStep>& steps,
                            const std::vector<double>& returns, double value_weight) {
  const std::size_t n = steps.size();
  std::vector<std::vector<double>> inputs(n), grads(n);
  for (std::size_t i = 0; i < n; ++i) {
    inputs[i].assign(steps[i].obs.v.begin(), steps[i].obs.v.end());
    const double v = mlp_forward(critic, inputs[i])[0];
    grads[i] = {value_weight * 2.0 * (v - returns[i])};
  }
  return mlp_backward(critic, inputs, grads);
}

void ppo_update(PolicyParams& params, const std::vector<TrajectoryStep>& steps,
                const DiscoveryConfig& cfg, AdamState& actor_state, AdamState& critic_state) {
  if (steps.empty()) throw InvalidArgument("ppo_update: empty trajectory batch");
  const std::vector<double> returns = trajectory_returns(steps, cfg.gamma);
  const std::vector<double> adv = normalized_advantages(steps, returns);
  const AdamConfig adam{cfg.lr, 0.9, 0.999, 1e-8, 0.0};
  for (std::uint32_t pass = 0; pass < cfg.ppo_epochs; ++pass) {
    const ParamTensors ag =
        ppo_actor_gradient(params.actor, steps, adv, cfg.ppo_clip, cfg.entropy_weight);
    const ParamTensors cg = value_gradient(params.critic, steps, returns, cfg.value_weight);
    adam_step(params.actor, ag, actor_state, adam);
    adam_step(params.critic, cg, critic_state, adam);
  }
}

EvolveStatus evolve_on_ledger(DiscernModel& model, Ledger& ledger,
                              const std::vector<Scene>& scenes, const TrainConfig& cfg,
                              std::uint64_t seed) {
  std::vector<EvolveCrop> crops;
  for (PseudoLabel& e : ledger.entries) {
    if (e.used) continue;
    e.used = true;
    if (e.scene_id >= scenes.size()) continue;
    const Scene& scene = scenes[e.scene_id];
    EvolveCrop crop;
    crop.points.reserve(e.subset_indices.size());
    for (const std::uint32_t pi : e.subset_indices) {
      const Vec3& p = scene.cloud.points[pi];
      crop.points.push_back({p.x - e.pose.cx, p.y - e.pose.cy, p.z});
    }
    crop.labels = e.fg_flags;
    crop.radius = e.pose.radius;
    crop.z_min = e.pose.z_min;
    crop.z_max = e.pose.z_max;
    crops.push_back(std::move(crop));
  }
  return evolve_discern(model, crops, cfg, seed);
}

namespace {

struct EpisodeOut {
  std::vector<TrajectoryStep> steps;
  std::vector<std::pair<PseudoLabel, bool>> candidates;  // label, valid
  double episode_return = 0.0;
};

EpisodeOut roll_episode(const Scene& scene, std::uint32_t scene_id, const DiscernModel& model,
                        const PriorLibrary& prior, const PolicyParams& params,
                        const DiscoveryConfig& cfg, std::uint32_t epoch, std::uint64_t seed,
                        std::uint32_t episode) {
  EpisodeOut out;
  ContainerEnv env(scene, model, prior, cfg.horizon, cfg.min_candidate_points, cfg.mask_snap);
  AgentObservation obs = env.reset(derive_seed(seed, {0xe0, epoch, scene_id, episode}));
  Rng act_rng(derive_seed(seed, {0xe1, epoch, scene_id, episode}));
  for (std::uint32_t t = 0; t < cfg.horizon; ++t) {
    const ActResult act = policy_act(params, obs);
    const AgentAction action = sample_action(act, act_rng);
    const ContainerEnv::StepResult sr = env.step(action);
    TrajectoryStep step;
    step.obs = obs;
    step.action = static_cast<std::uint8_t>(action);
    step.logp_old = safe_log(act.probs[static_cast<int>(action)]);
    step.value_old = act.value;
    step.reward = sr.reward;
    step.episode_start = t == 0;
    out.steps.push_back(step);
    out.episode_return += sr.reward;
    if (sr.valid) {
      PseudoLabel label;
      label.scene_id = scene_id;
      label.pose = env.pose();
      label.subset_indices = sr.subset.parent_indices;
      label.fg_flags = sr.refined_flags;
      label.mask = sr.refined_mask;
      label.score = sr.score;
      label.epoch = epoch;
      out.candidates.push_back({std::move(label), true});
    }
    obs = sr.obs;
    if (sr.done) break;
  }
  return out;
}

}  // namespace

DiscoveryResult run_discovery(const std::vector<Scene>& scenes, const DiscernModel& model,
                              const PriorLibrary& prior, const DiscoveryConfig& cfg,
                              std::uint64_t seed) {
  DiscoveryResult result;
  result.policy = make_policy(derive_seed(seed, {0xa0}));
  result.discern = model;
  AdamState actor_state = AdamState::init(result.policy.actor);
  AdamState critic_state = AdamState::init(result.policy.critic);

  const bool have_gt = !scenes.empty() && scenes.front().cloud.has_ids();

  for (std::uint32_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const std::size_t n_jobs = scenes.size() * cfg.episodes_per_scene;
    std::vector<EpisodeOut> episodes(n_jobs);
    auto run_job = [&](std::size_t job) {
      const std::uint32_t si = static_cast<std::uint32_t>(job / cfg.episodes_per_scene);
      const std::uint32_t ep = static_cast<std::uint32_t>(job % cfg.episodes_per_scene);
      episodes[job] = roll_episode(scenes[si], si, result.discern, prior, result.policy, cfg,
                                   epoch, seed, ep);
    };
    if (cfg.workers > 1 && n_jobs > 1) {
      // static partition; merged order below stays fixed regardless of timing
      std::vector<std::thread> threads;
      const std::uint32_t n_threads =
          std::min<std::uint32_t>(cfg.workers, static_cast<std::uint32_t>(n_jobs));
      for (std::uint32_t w = 0; w < n_threads; ++w) {
        threads.emplace_back([&, w] {
          for (std::size_t job = w; job < n_jobs; job += n_threads) run_job(job);
        });
      }
      for (auto& t : threads) t.join();
    } else {
      for (std::size_t job = 0; job < n_jobs; ++job) run_job(job);
    }

    std::vector<TrajectoryStep> batch;
    double return_sum = 0.0;
    for (EpisodeOut& ep : episodes) {
      batch.insert(batch.end(), ep.steps.begin(), ep.steps.end());
      return_sum += ep.episode_return;
      for (auto& [label, valid] : ep.candidates)
        accumulate_pseudo_label(result.ledger, std::move(label), valid, cfg.dedup_iou);
    }
    if (!batch.empty()) ppo_update(result.policy, batch, cfg, actor_state, critic_state);

    EpochLog log;
    log.epoch = epoch;
    log.mean_reward = n_jobs > 0 ? return_sum / static_cast<double>(n_jobs) : 0.0;
    if (cfg.evolve_interval >= 1 && epoch % cfg.evolve_interval == 0) {
      const EvolveStatus status = evolve_on_ledger(result.discern, result.ledger, scenes,
                                                   cfg.evolve, derive_seed(seed, {0xf0, epoch}));
      log.evolve_event = status == EvolveStatus::Updated;
    }
    log.ledger_size = result.ledger.size();
    if (cfg.diagnostics && have_gt) {
      log.sufficiency = ledger_sufficiency(result.ledger, scenes, 0.6);
      const std::uint32_t interval = std::max<std::uint32_t>(cfg.diagnostics_interval, 1);
      if (epoch % interval == 0 || epoch == cfg.epochs)
        log.discern_accuracy =
            discern_accuracy(result.discern, scenes, derive_seed(seed, {0xd0}));
    }
    result.log.push_back(log);
  }
  return result;
}

}  // namespace evobj
