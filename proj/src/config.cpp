#include "evobj/config.hpp"

#include <fstream>

#include "evobj/common.hpp"

namespace evobj {

RunConfig RunConfig::defaults() {
  RunConfig cfg;
  auto& v = cfg.values_;
  v["seed"] = 0;
  v["out"] = "";
  v["workers"] = 1;
  // shape library
  v["categories"] = "chair,sofa,telephone,airplane,rifle,cabinet";
  v["per_category"] = 20;
  // scene generation
  v["scenes"] = 200;
  v["points"] = 20000;
  v["min_objects"] = 4;
  v["max_objects"] = 8;
  v["floor_width"] = 5.0;
  v["aspect_min"] = 0.6;
  v["aspect_max"] = 1.0;
  v["wall_height"] = 1.2;
  v["occlusion"] = true;
  v["pool"] = "train";
  v["fuse_min"] = 2;
  v["fuse_max"] = 4;
  v["camera_distance"] = 2.0;
  v["camera_fov"] = 40.0;
  v["camera_resolution"] = 128;
  // discerning module
  v["k"] = 8;
  v["theta"] = 0.5;
  v["hidden"] = "32,32";
  v["pretrain_lr"] = 1e-3;
  v["pretrain_weight_decay"] = 1e-4;
  v["pretrain_batch"] = 32;
  v["pretrain_epochs"] = 20;
  v["pretrain_templates_per_epoch"] = 48;
  v["pretrain_camera_resolution"] = 96;
  v["holdout_fraction"] = 0.2;
  // evolving
  v["evolve_epochs"] = 40;
  v["evolve_lr"] = 1e-3;
  v["evolve_weight_decay"] = 1e-4;
  v["evolve_batch"] = 32;
  v["yaw_aug_deg"] = 180.0;
  v["scale_aug_min"] = 0.9;
  v["scale_aug_max"] = 1.1;
  // shape prior / completion
  v["cd_threshold"] = 0.10;
  v["tau"] = 0.05;
  v["yaw_bins"] = 36;
  v["completed_points"] = 1024;
  v["query_cap"] = 128;
  v["template_cap"] = 2048;
  v["completion"] = true;
  v["prior_per_category"] = 0;  // 0 = the whole train pool
  // discovery
  v["epochs"] = 200;
  v["episodes_per_scene"] = 1;
  v["horizon"] = 10;
  v["evolve_interval"] = 100;
  v["ppo_clip"] = 0.2;
  v["ppo_epochs"] = 4;
  v["entropy_weight"] = 0.01;
  v["value_weight"] = 0.5;
  v["policy_lr"] = 1e-4;
  v["gamma"] = 1.0;
  v["dedup_iou"] = 0.9;
  v["min_candidate_points"] = 8;
  v["mask_snap"] = 0.08;
  v["diagnostics"] = true;
  v["diagnostics_interval"] = 5;  // discern-accuracy cadence, epochs
  // evaluation
  v["eval_episodes"] = 16;
  v["suppress_iou"] = 0.3;
  v["plot"] = false;
  // input paths
  v["dataset"] = "";
  v["library"] = "";
  v["checkpoint"] = "";
  v["run"] = "";
  v["masks"] = "";
  v["report"] = "";
  return cfg;
}

void RunConfig::merge_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NotFound("config file not found: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("config file " + path + ": " + e.what());
  }
  if (!j.is_object()) throw ParseError("config file must hold a JSON object");
  for (const auto& [key, value] : j.items()) set(key, value);
}

void RunConfig::set(const std::string& key, const nlohmann::json& value) {
  const auto it = values_.find(key);
  if (it == values_.end()) throw InvalidArgument("unknown config key: " + key);
  it->second = value;
}

void RunConfig::set_from_string(const std::string& key, const std::string& text) {
  const auto it = values_.find(key);
  if (it == values_.end()) throw InvalidArgument("unknown config key: " + key);
  if (it->second.is_string()) {
    it->second = text;
    return;
  }
  try {
    it->second = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error&) {
    throw InvalidArgument("cannot parse value for --" + key + ": " + text);
  }
}

const nlohmann::json& RunConfig::at(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw InvalidArgument("unknown config key: " + key);
  return it->second;
}

double RunConfig::get_f64(const std::string& key) const {
  const auto& j = at(key);
  if (!j.is_number()) throw InvalidArgument("config key " + key + " must be a number");
  return j.get<double>();
}

std::int64_t RunConfig::get_i64(const std::string& key) const {
  const auto& j = at(key);
  if (!j.is_number_integer()) throw InvalidArgument("config key " + key + " must be an integer");
  return j.get<std::int64_t>();
}

std::uint32_t RunConfig::get_u32(const std::string& key) const {
  const std::int64_t v = get_i64(key);
  if (v < 0 || v > 0xffffffffLL) throw InvalidArgument("config key " + key + " out of range");
  return static_cast<std::uint32_t>(v);
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
  const std::int64_t v = get_i64(key);
  if (v < 0) throw InvalidArgument("config key " + key + " must be non-negative");
  return static_cast<std::uint64_t>(v);
}

bool RunConfig::get_bool(const std::string& key) const {
  const auto& j = at(key);
  if (!j.is_boolean()) throw InvalidArgument("config key " + key + " must be a boolean");
  return j.get<bool>();
}

std::string RunConfig::get_str(const std::string& key) const {
  const auto& j = at(key);
  if (!j.is_string()) throw InvalidArgument("config key " + key + " must be a string");
  return j.get<std::string>();
}

std::vector<std::uint32_t> RunConfig::get_u32_list(const std::string& key) const {
  const std::string text = get_str(key);
  std::vector<std::uint32_t> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t next = text.find(',', pos);
    if (next == std::string::npos) next = text.size();
    const std::string item = text.substr(pos, next - pos);
    if (!item.empty()) out.push_back(static_cast<std::uint32_t>(std::stoul(item)));
    pos = next + 1;
  }
  return out;
}

std::string RunConfig::resolved_json() const {
  nlohmann::json j(values_);
  return j.dump(2) + "\n";
}

}  // namespace evobj
