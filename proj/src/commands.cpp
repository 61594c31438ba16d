#include "evobj/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "evobj/log.hpp"
#include "evobj/pointio.hpp"

namespace evobj {

namespace fs = std::filesystem;

std::vector<Category> categories_from(const RunConfig& cfg) {
  const std::string text = cfg.get_str("categories");
  std::vector<Category> cats;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t next = text.find(',', pos);
    if (next == std::string::npos) next = text.size();
    const std::string item = text.substr(pos, next - pos);
    if (!item.empty()) cats.push_back(category_from_string(item));
    pos = next + 1;
  }
  if (cats.empty()) throw InvalidArgument("categories: empty list");
  return cats;
}

PriorConfig prior_config_from(const RunConfig& cfg) {
  PriorConfig pc;
  pc.yaw_bins = cfg.get_u32("yaw_bins");
  pc.cd_threshold = cfg.get_f64("cd_threshold");
  pc.tau = cfg.get_f64("tau");
  pc.completed_points = cfg.get_u32("completed_points");
  pc.retrieval_query_cap = cfg.get_u32("query_cap");
  pc.template_index_cap = cfg.get_u32("template_cap");
  pc.completion = cfg.get_bool("completion");
  return pc;
}

DiscoveryConfig discovery_config_from(const RunConfig& cfg) {
  DiscoveryConfig dc;
  dc.epochs = cfg.get_u32("epochs");
  dc.episodes_per_scene = cfg.get_u32("episodes_per_scene");
  dc.horizon = cfg.get_u32("horizon");
  dc.evolve_interval = cfg.get_u32("evolve_interval");
  dc.ppo_clip = cfg.get_f64("ppo_clip");
  dc.ppo_epochs = cfg.get_u32("ppo_epochs");
  dc.entropy_weight = cfg.get_f64("entropy_weight");
  dc.value_weight = cfg.get_f64("value_weight");
  dc.lr = cfg.get_f64("policy_lr");
  dc.gamma = cfg.get_f64("gamma");
  dc.dedup_iou = cfg.get_f64("dedup_iou");
  dc.min_candidate_points = cfg.get_u32("min_candidate_points");
  dc.mask_snap = cfg.get_f64("mask_snap");
  dc.diagnostics = cfg.get_bool("diagnostics");
  dc.diagnostics_interval = cfg.get_u32("diagnostics_interval");
  dc.workers = cfg.get_u32("workers");
  dc.evolve = TrainConfig{cfg.get_f64("evolve_lr"),       cfg.get_f64("evolve_weight_decay"),
                          cfg.get_u32("evolve_batch"),    cfg.get_u32("evolve_epochs"),
                          cfg.get_f64("yaw_aug_deg"),     cfg.get_f64("scale_aug_min"),
                          cfg.get_f64("scale_aug_max"),   0};
  return dc;
}

TrainConfig pretrain_config_from(const RunConfig& cfg) {
  return TrainConfig{cfg.get_f64("pretrain_lr"),    cfg.get_f64("pretrain_weight_decay"),
                     cfg.get_u32("pretrain_batch"), cfg.get_u32("pretrain_epochs"),
                     180.0,                         0.9,
                     1.1,                           cfg.get_u32("pretrain_templates_per_epoch")};
}

PriorLibrary build_discovery_prior(const std::vector<ShapeTemplate>& train_pool,
                                   const RunConfig& cfg) {
  const std::uint32_t per_cat = cfg.get_u32("prior_per_category");
  if (per_cat == 0) return PriorLibrary(train_pool, prior_config_from(cfg));
  // deterministic subset: lowest template ids per category
  std::vector<const ShapeTemplate*> sorted;
  for (const ShapeTemplate& t : train_pool) sorted.push_back(&t);
  std::sort(sorted.begin(), sorted.end(), [](const ShapeTemplate* a, const ShapeTemplate* b) {
    return a->template_id < b->template_id;
  });
  std::map<Category, std::uint32_t> taken;
  std::vector<ShapeTemplate> subset;
  for (const ShapeTemplate* t : sorted)
    if (taken[t->category]++ < per_cat) subset.push_back(*t);
  return PriorLibrary(subset, prior_config_from(cfg));
}

namespace {

CameraConfig camera_from(const RunConfig& cfg) {
  CameraConfig cam;
  cam.distance = cfg.get_f64("camera_distance");
  cam.fov_deg = cfg.get_f64("camera_fov");
  cam.resolution = cfg.get_u32("camera_resolution");
  return cam;
}

std::string require_out(const RunConfig& cfg) {
  const std::string out = cfg.get_str("out");
  if (out.empty()) throw InvalidArgument("--out is required");
  return out;
}

std::string require_path(const RunConfig& cfg, const std::string& key) {
  const std::string path = cfg.get_str(key);
  if (path.empty()) throw InvalidArgument("--" + key + " is required");
  if (!fs::exists(path)) throw NotFound("--" + key + ": no such path: " + path);
  return path;
}

void write_resolved_config(const RunConfig& cfg, const std::string& dir) {
  write_text_file((fs::path(dir) / "resolved_config.json").string(), cfg.resolved_json());
}

std::vector<std::uint32_t> hidden_dims(const RunConfig& cfg) {
  auto dims = cfg.get_u32_list("hidden");
  if (dims.empty()) throw InvalidArgument("hidden: empty layer list");
  return dims;
}

}  // namespace

int cmd_generate(const RunConfig& cfg) {
  const std::string out = require_out(cfg);
  const std::uint64_t seed = cfg.get_u64("seed");
  EVOBJ_INFO("building shape library (%u per category per pool)", cfg.get_u32("per_category"));
  const ShapeLibrary library =
      build_library(categories_from(cfg), cfg.get_u32("per_category"), seed);
  const auto& pool = cfg.get_str("pool") == "test" ? library.test : library.train;
  EVOBJ_INFO("composing %u scenes", cfg.get_u32("scenes"));
  const GeneratedScenes generated = generate_scenes(pool, scene_config_from(cfg),
                                                    cfg.get_u32("scenes"), seed,
                                                    cfg.get_u32("workers"));
  write_dataset(out, library, generated, cfg);
  write_resolved_config(cfg, out);
  EVOBJ_INFO("dataset written to %s (%zu discards)", out.c_str(), generated.discards.size());
  return kExitOk;
}

int cmd_build_library(const RunConfig& cfg) {
  const std::string out = require_out(cfg);
  const ShapeLibrary library =
      build_library(categories_from(cfg), cfg.get_u32("per_category"), cfg.get_u64("seed"));
  fs::create_directories(out);
  nlohmann::json manifest;
  manifest["format_version"] = 1;
  manifest["seed"] = cfg.get_i64("seed");
  nlohmann::json lib_json;
  write_library_dir(out, library, lib_json);
  manifest["library"] = std::move(lib_json);
  write_text_file((fs::path(out) / "library_manifest.json").string(), manifest.dump(2) + "\n");
  write_resolved_config(cfg, out);
  return kExitOk;
}

int cmd_pretrain_discern(const RunConfig& cfg) {
  const std::string out = require_out(cfg);
  const std::string dataset_dir = require_path(cfg, "dataset");
  const LoadedDataset data = load_dataset(dataset_dir, /*load_scenes=*/false);
  if (data.library.train.empty()) throw NotFound("dataset has no train-pool templates");

  // hold out a slice of templates for the logged generalization check
  const double holdout = cfg.get_f64("holdout_fraction");
  std::vector<ShapeTemplate> train_pool, holdout_pool;
  const std::size_t stride =
      holdout > 0.0 ? std::max<std::size_t>(2, static_cast<std::size_t>(std::lround(1.0 / holdout)))
                    : 0;
  for (std::size_t i = 0; i < data.library.train.size(); ++i) {
    if (stride > 0 && i % stride == stride - 1)
      holdout_pool.push_back(data.library.train[i]);
    else
      train_pool.push_back(data.library.train[i]);
  }

  const std::uint64_t seed = cfg.get_u64("seed");
  CameraConfig cam = camera_from(cfg);
  cam.resolution = cfg.get_u32("pretrain_camera_resolution");
  EVOBJ_INFO("pretraining on %zu templates (%zu held out)", train_pool.size(),
             holdout_pool.size());
  PretrainResult result = pretrain_discern(train_pool, pretrain_config_from(cfg),
                                           static_cast<int>(cfg.get_u32("k")),
                                           cfg.get_f64("theta"), seed, cam, hidden_dims(cfg));

  double holdout_accuracy = -1.0;
  if (!holdout_pool.empty()) {
    std::size_t correct = 0, total = 0;
    for (std::size_t ti = 0; ti < holdout_pool.size(); ++ti) {
      for (std::uint64_t s = 0; s < 3; ++s) {
        const PretrainSample sample =
            make_pretrain_sample(holdout_pool[ti], derive_seed(seed, {0x40ccu, ti, s}), cam);
        CandidateSubset subset;
        subset.points = sample.cloud.points;
        subset.parent_indices.resize(subset.points.size());
        const auto probs = discern_predict(result.model, subset, sample.pose);
        for (std::size_t i = 0; i < probs.size(); ++i) {
          const bool fg = probs[i] >= result.model.theta;
          if (fg == (sample.labels[i] != 0)) ++correct;
          ++total;
        }
      }
    }
    holdout_accuracy = static_cast<double>(correct) / static_cast<double>(total);
    EVOBJ_INFO("held-out point accuracy: %.4f", holdout_accuracy);
  }

  fs::create_directories(out);
  save_discern(result.model, (fs::path(out) / "discern.json").string());
  nlohmann::json metrics;
  metrics["loss_curve"] = result.loss_curve;
  metrics["holdout_accuracy"] = holdout_accuracy;
  metrics["seed"] = cfg.get_i64("seed");
  write_text_file((fs::path(out) / "pretrain_metrics.json").string(), metrics.dump(2) + "\n");
  write_resolved_config(cfg, out);
  return kExitOk;
}

void save_policy(const PolicyParams& policy, const std::string& path) {
  nlohmann::json j;
  j["actor"] = nlohmann::json::parse(mlp_to_json(policy.actor));
  j["critic"] = nlohmann::json::parse(mlp_to_json(policy.critic));
  write_text_file(path, j.dump());
}

PolicyParams load_policy(const std::string& path) {
  const nlohmann::json j = nlohmann::json::parse(read_text_file(path));
  PolicyParams p;
  p.actor = mlp_from_json(j.at("actor").dump());
  p.critic = mlp_from_json(j.at("critic").dump());
  return p;
}

std::string epoch_log_to_ndjson(const std::vector<EpochLog>& log) {
  std::string out;
  for (const EpochLog& e : log) {
    nlohmann::json j;
    j["epoch"] = e.epoch;
    j["mean_reward"] = e.mean_reward;
    j["ledger_size"] = e.ledger_size;
    j["evolve_event"] = e.evolve_event;
    if (e.sufficiency) j["sufficiency"] = *e.sufficiency;
    if (e.discern_accuracy) j["discern_accuracy"] = *e.discern_accuracy;
    out += j.dump();
    out += "\n";
  }
  return out;
}

int cmd_discover(const RunConfig& cfg) {
  const std::string out = require_out(cfg);
  const std::string dataset_dir = require_path(cfg, "dataset");
  const std::string ckpt = require_path(cfg, "checkpoint");
  const LoadedDataset data = load_dataset(dataset_dir);
  if (data.scenes.empty()) throw NotFound("dataset has no scenes: " + dataset_dir);
  const DiscernModel model = load_discern(ckpt);
  const PriorLibrary prior = build_discovery_prior(data.library.train, cfg);
  EVOBJ_INFO("discovery: %zu scenes, %zu prior templates, %u epochs", data.scenes.size(),
             prior.size(), cfg.get_u32("epochs"));
  const DiscoveryResult result =
      run_discovery(data.scenes, model, prior, discovery_config_from(cfg), cfg.get_u64("seed"));

  fs::create_directories(out);
  save_policy(result.policy, (fs::path(out) / "policy.json").string());
  save_discern(result.discern, (fs::path(out) / "discern_evolved.json").string());
  write_text_file((fs::path(out) / "ledger.json").string(), ledger_to_json(result.ledger));
  write_text_file((fs::path(out) / "log.ndjson").string(), epoch_log_to_ndjson(result.log));
  write_resolved_config(cfg, out);
  if (!result.log.empty())
    EVOBJ_INFO("final epoch: mean_reward=%.4f ledger=%llu", result.log.back().mean_reward,
               static_cast<unsigned long long>(result.log.back().ledger_size));
  return kExitOk;
}

Ledger discover_candidates(const std::vector<Scene>& scenes, const PolicyParams& policy,
                           const DiscernModel& model, const PriorLibrary& prior,
                           const DiscoveryConfig& cfg, std::uint32_t episodes_per_scene,
                           std::uint64_t seed) {
  Ledger ledger;
  for (std::uint32_t si = 0; si < scenes.size(); ++si) {
    for (std::uint32_t ep = 0; ep < episodes_per_scene; ++ep) {
      ContainerEnv env(scenes[si], model, prior, cfg.horizon, cfg.min_candidate_points,
                       cfg.mask_snap);
      AgentObservation obs = env.reset(derive_seed(seed, {0x1e0, si, ep}));
      Rng act_rng(derive_seed(seed, {0x1e1, si, ep}));
      for (std::uint32_t t = 0; t < cfg.horizon; ++t) {
        const ActResult act = policy_act(policy, obs);
        const AgentAction action = sample_action(act, act_rng);
        const ContainerEnv::StepResult sr = env.step(action);
        if (sr.valid) {
          PseudoLabel label;
          label.scene_id = si;
          label.pose = env.pose();
          label.subset_indices = sr.subset.parent_indices;
          label.fg_flags = sr.refined_flags;
          label.mask = sr.refined_mask;
          label.score = sr.score;
          label.epoch = 0;
          accumulate_pseudo_label(ledger, std::move(label), true, cfg.dedup_iou);
        }
        obs = sr.obs;
        if (sr.done) break;
      }
    }
  }
  return ledger;
}

nlohmann::json report_to_json(const EvalReport& report) {
  nlohmann::json j;
  j["ap"] = report.ap;
  j["ap50"] = report.ap50;
  j["ap25"] = report.ap25;
  j["scene_count"] = report.scene_count;
  nlohmann::json curves = nlohmann::json::array();
  for (const PrCurve& c : report.curves)
    curves.push_back({{"threshold", c.threshold},
                      {"ap", c.ap},
                      {"precision", c.precision},
                      {"recall", c.recall}});
  j["curves"] = std::move(curves);
  return j;
}

std::string report_to_csv(const EvalReport& report) {
  std::string out = "metric,threshold,value\n";
  char line[96];
  std::snprintf(line, sizeof(line), "ap,,%.6f\n", report.ap);
  out += line;
  std::snprintf(line, sizeof(line), "ap50,0.50,%.6f\n", report.ap50);
  out += line;
  std::snprintf(line, sizeof(line), "ap25,0.25,%.6f\n", report.ap25);
  out += line;
  for (const PrCurve& c : report.curves) {
    std::snprintf(line, sizeof(line), "ap_at,%.2f,%.6f\n", c.threshold, c.ap);
    out += line;
  }
  return out;
}

int cmd_evaluate(const RunConfig& cfg) {
  const std::string out = require_out(cfg);
  const std::string dataset_dir = require_path(cfg, "dataset");
  const std::string run_dir = require_path(cfg, "run");

  const LoadedDataset data = load_dataset(dataset_dir);
  if (data.scenes.empty()) throw NotFound("dataset has no scenes: " + dataset_dir);
  const PolicyParams policy = load_policy((fs::path(run_dir) / "policy.json").string());
  const DiscernModel model =
      load_discern((fs::path(run_dir) / "discern_evolved.json").string());

  // the prior stays the train-pool prior; by default it comes from the
  // dataset the run was trained on
  const std::string library_dir = cfg.get_str("library");
  PriorLibrary prior = [&] {
    if (!library_dir.empty()) {
      const LoadedDataset lib = load_dataset(library_dir, /*load_scenes=*/false);
      return build_discovery_prior(lib.library.train, cfg);
    }
    const nlohmann::json run_cfg =
        nlohmann::json::parse(read_text_file((fs::path(run_dir) / "resolved_config.json").string()));
    const std::string train_dataset = run_cfg.at("dataset").get<std::string>();
    if (!fs::exists(train_dataset))
      throw NotFound("train dataset from run config not found: " + train_dataset +
                     " (pass --library)");
    const LoadedDataset lib = load_dataset(train_dataset, /*load_scenes=*/false);
    return build_discovery_prior(lib.library.train, cfg);
  }();

  const DiscoveryConfig dc = discovery_config_from(cfg);
  EVOBJ_INFO("evaluating on %zu scenes (%u episodes each)", data.scenes.size(),
             cfg.get_u32("eval_episodes"));
  const Ledger ledger = discover_candidates(data.scenes, policy, model, prior, dc,
                                            cfg.get_u32("eval_episodes"), cfg.get_u64("seed"));

  std::vector<InstancePrediction> preds;
  std::vector<MaskFileEntry> mask_entries;
  for (std::uint32_t si = 0; si < data.scenes.size(); ++si) {
    const auto scene_preds = consolidate_masks(ledger, si, cfg.get_f64("suppress_iou"));
    MaskFileEntry entry;
    entry.scene_id = si;
    for (const InstancePrediction& p : scene_preds) {
      entry.masks.push_back(p.indices);
      entry.confidences.push_back(p.confidence);
    }
    mask_entries.push_back(std::move(entry));
    preds.insert(preds.end(), scene_preds.begin(), scene_preds.end());
  }
  const EvalReport report = evaluate_ap(preds, ground_truth_by_scene(data.scenes));

  fs::create_directories(out);
  write_text_file((fs::path(out) / "report.json").string(), report_to_json(report).dump(2) + "\n");
  write_text_file((fs::path(out) / "report.csv").string(), report_to_csv(report));
  write_text_file((fs::path(out) / "predictions.json").string(), masks_to_json(mask_entries));
  write_resolved_config(cfg, out);
  EVOBJ_INFO("AP=%.4f AP@50=%.4f AP@25=%.4f", report.ap, report.ap50, report.ap25);
  return kExitOk;
}

std::vector<MaskFileEntry> parse_masks_file(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("masks file: ") + e.what());
  }
  if (!j.is_array()) throw ParseError("masks file: top level must be an array");
  std::vector<MaskFileEntry> out;
  for (const auto& item : j) {
    MaskFileEntry entry;
    entry.scene_id = item.at("scene_id").get<std::uint32_t>();
    for (const auto& m : item.at("masks")) {
      entry.masks.push_back(m.at("indices").get<std::vector<std::uint32_t>>());
      entry.confidences.push_back(m.value("confidence", 1.0));
    }
    out.push_back(std::move(entry));
  }
  return out;
}

std::string masks_to_json(const std::vector<MaskFileEntry>& entries) {
  nlohmann::json arr = nlohmann::json::array();
  for (const MaskFileEntry& e : entries) {
    nlohmann::json masks = nlohmann::json::array();
    for (std::size_t i = 0; i < e.masks.size(); ++i)
      masks.push_back({{"indices", e.masks[i]}, {"confidence", e.confidences[i]}});
    arr.push_back({{"scene_id", e.scene_id}, {"masks", std::move(masks)}});
  }
  return arr.dump(2) + "\n";
}

int cmd_refine(const RunConfig& cfg) {
  const std::string out = require_out(cfg);
  const std::string dataset_dir = require_path(cfg, "dataset");
  const std::string ckpt = require_path(cfg, "checkpoint");
  const std::string masks_path = require_path(cfg, "masks");

  const LoadedDataset data = load_dataset(dataset_dir);
  const DiscernModel model = load_discern(ckpt);
  std::vector<MaskFileEntry> entries = parse_masks_file(read_text_file(masks_path));
  for (MaskFileEntry& entry : entries) {
    if (entry.scene_id >= data.scenes.size())
      throw InvalidArgument("masks file references unknown scene id " +
                            std::to_string(entry.scene_id));
    entry.masks = refine_external_masks(model, data.scenes[entry.scene_id].cloud, entry.masks);
  }
  write_text_file(out, masks_to_json(entries));
  return kExitOk;
}

namespace {

std::string svg_polyline(const std::vector<double>& xs, const std::vector<double>& ys, double w,
                         double h, const char* color) {
  std::string pts;
  char buf[64];
  for (std::size_t i = 0; i < xs.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.1f,%.1f ", 40.0 + xs[i] * (w - 60.0),
                  h - 30.0 - ys[i] * (h - 50.0));
    pts += buf;
  }
  return "<polyline fill=\"none\" stroke=\"" + std::string(color) +
         "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
}

}  // namespace

int cmd_report(const RunConfig& cfg) {
  const std::string report_path = require_path(cfg, "report");
  const nlohmann::json j = nlohmann::json::parse(read_text_file(report_path));
  std::printf("scenes: %u\n", j.at("scene_count").get<std::uint32_t>());
  std::printf("%-10s %8s\n", "metric", "value");
  std::printf("%-10s %8.4f\n", "AP", j.at("ap").get<double>());
  std::printf("%-10s %8.4f\n", "AP@50", j.at("ap50").get<double>());
  std::printf("%-10s %8.4f\n", "AP@25", j.at("ap25").get<double>());
  for (const auto& c : j.at("curves"))
    std::printf("ap@%.2f     %8.4f\n", c.at("threshold").get<double>(),
                c.at("ap").get<double>());
  if (cfg.get_bool("plot")) {
    const double w = 480, h = 360;
    std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"360\">\n";
    svg += "<rect width=\"480\" height=\"360\" fill=\"white\"/>\n";
    svg += "<line x1=\"40\" y1=\"330\" x2=\"460\" y2=\"330\" stroke=\"black\"/>\n";
    svg += "<line x1=\"40\" y1=\"330\" x2=\"40\" y2=\"20\" stroke=\"black\"/>\n";
    svg += "<text x=\"220\" y=\"352\" font-size=\"12\">recall</text>\n";
    svg += "<text x=\"6\" y=\"170\" font-size=\"12\" transform=\"rotate(-90 12 180)\">precision</text>\n";
    const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
                            "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#446644"};
    int ci = 0;
    for (const auto& c : j.at("curves")) {
      const auto rec = c.at("recall").get<std::vector<double>>();
      const auto prec = c.at("precision").get<std::vector<double>>();
      svg += svg_polyline(rec, prec, w, h, colors[ci % 11]);
      ++ci;
    }
    svg += "</svg>\n";
    const std::string svg_path =
        (fs::path(report_path).parent_path() / "report.svg").string();
    write_text_file(svg_path, svg);
    std::printf("plot written to %s\n", svg_path.c_str());
  }
  return kExitOk;
}

}  // namespace evobj
