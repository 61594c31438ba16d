#include "evobj/dataset.hpp"

#include <cstdio>
#include <filesystem>
#include <thread>

#include "evobj/pointio.hpp"
#include "evobj/rng.hpp"

namespace evobj {

namespace fs = std::filesystem;

namespace {

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

struct SlotResult {
  Scene scene;
  std::uint32_t attempts = 0;
};

SlotResult generate_slot(const std::vector<ShapeTemplate>& pool, const SceneGenConfig& cfg,
                         std::uint64_t seed, std::uint32_t slot) {
  SlotResult out;
  for (std::uint32_t attempt = 0;; ++attempt) {
    auto scene = compose_scene(pool, cfg, derive_seed(seed, {0x5ce4e, slot, attempt}));
    if (scene) {
      out.scene = std::move(*scene);
      out.attempts = attempt;
      return out;
    }
    if (attempt > 100000) throw InvalidArgument("generate_scenes: cannot place objects; floor too small");
  }
}

}  // namespace

GeneratedScenes generate_scenes(const std::vector<ShapeTemplate>& pool,
                                const SceneGenConfig& cfg, std::uint32_t count,
                                std::uint64_t seed, std::uint32_t workers) {
  std::vector<SlotResult> slots(count);
  auto run = [&](std::uint32_t slot) { slots[slot] = generate_slot(pool, cfg, seed, slot); };
  if (workers > 1 && count > 1) {
    std::vector<std::thread> threads;
    const std::uint32_t n = std::min(workers, count);
    for (std::uint32_t w = 0; w < n; ++w)
      threads.emplace_back([&, w] {
        for (std::uint32_t slot = w; slot < count; slot += n) run(slot);
      });
    for (auto& t : threads) t.join();
  } else {
    for (std::uint32_t slot = 0; slot < count; ++slot) run(slot);
  }
  GeneratedScenes out;
  out.scenes.reserve(count);
  for (std::uint32_t slot = 0; slot < count; ++slot) {
    if (slots[slot].attempts > 0) out.discards.push_back({slot, slots[slot].attempts});
    out.scenes.push_back(std::move(slots[slot].scene));
  }
  return out;
}

SceneGenConfig scene_config_from(const RunConfig& cfg) {
  SceneGenConfig sc;
  sc.points_total = cfg.get_u32("points");
  sc.min_objects = cfg.get_u32("min_objects");
  sc.max_objects = cfg.get_u32("max_objects");
  sc.floor_width = cfg.get_f64("floor_width");
  sc.aspect_min = cfg.get_f64("aspect_min");
  sc.aspect_max = cfg.get_f64("aspect_max");
  sc.wall_height = cfg.get_f64("wall_height");
  sc.occlusion = cfg.get_bool("occlusion");
  sc.fuse_min = cfg.get_u32("fuse_min");
  sc.fuse_max = cfg.get_u32("fuse_max");
  sc.camera.distance = cfg.get_f64("camera_distance");
  sc.camera.fov_deg = cfg.get_f64("camera_fov");
  sc.camera.resolution = cfg.get_u32("camera_resolution");
  return sc;
}

void write_library_dir(const std::string& dir, const ShapeLibrary& library,
                       nlohmann::json& manifest_out, const std::string& rel_prefix) {
  fs::create_directories(fs::path(dir) / "train");
  fs::create_directories(fs::path(dir) / "test");
  for (const bool test_pool : {false, true}) {
    const auto& pool = test_pool ? library.test : library.train;
    nlohmann::json list = nlohmann::json::array();
    for (const ShapeTemplate& tpl : pool) {
      const std::string rel =
          std::string(test_pool ? "test/" : "train/") + "tpl_" + tpl.template_id + ".bin";
      const std::string path = (fs::path(dir) / rel).string();
      const auto bytes = encode_point_cloud(tpl.surface_points);
      write_file_bytes(path, bytes);
      list.push_back({{"id", tpl.template_id},
                      {"category", to_string(tpl.category)},
                      {"file", rel_prefix + rel},
                      {"points", tpl.surface_points.size()},
                      {"checksum", hex64(fnv1a64(bytes))}});
    }
    manifest_out[test_pool ? "test" : "train"] = std::move(list);
  }
}

void write_dataset(const std::string& dir, const ShapeLibrary& library,
                   const GeneratedScenes& generated, const RunConfig& cfg) {
  fs::create_directories(fs::path(dir) / "scenes");
  nlohmann::json manifest;
  manifest["format_version"] = 1;
  manifest["seed"] = cfg.get_i64("seed");
  manifest["scene_count"] = generated.scenes.size();
  manifest["allocation"] = "surface-area-proportional";
  manifest["config"] = nlohmann::json(cfg.values());

  nlohmann::json library_json;
  write_library_dir((fs::path(dir) / "library").string(), library, library_json, "library/");
  manifest["library"] = std::move(library_json);

  nlohmann::json discards = nlohmann::json::array();
  for (const DiscardEvent& d : generated.discards)
    discards.push_back({{"scene", d.scene}, {"attempts", d.attempts}});
  manifest["discards"] = std::move(discards);

  nlohmann::json scene_list = nlohmann::json::array();
  for (std::size_t i = 0; i < generated.scenes.size(); ++i) {
    const Scene& scene = generated.scenes[i];
    char name[40];
    std::snprintf(name, sizeof(name), "scenes/scene_%05zu.bin", i);
    const auto bytes = encode_point_cloud(scene.cloud);
    write_file_bytes((fs::path(dir) / name).string(), bytes);
    nlohmann::json objects = nlohmann::json::array();
    for (const ObjectRecord& rec : scene.objects)
      objects.push_back({{"category", to_string(rec.category)},
                         {"template_id", rec.template_id},
                         {"occluded", rec.occluded}});
    scene_list.push_back({{"file", name},
                          {"floor_w", scene.floor_w},
                          {"floor_d", scene.floor_d},
                          {"wall_height", scene.wall_height},
                          {"objects", std::move(objects)},
                          {"checksum", hex64(fnv1a64(bytes))}});
  }
  manifest["scenes"] = std::move(scene_list);
  write_text_file((fs::path(dir) / "manifest.json").string(), manifest.dump(2) + "\n");
}

LoadedDataset load_dataset(const std::string& dir, bool load_scenes) {
  // accepts either a dataset directory (manifest.json) or a bare library
  // directory written by build-library (library_manifest.json)
  std::string manifest_path = (fs::path(dir) / "manifest.json").string();
  if (!fs::exists(manifest_path)) {
    const std::string lib_manifest = (fs::path(dir) / "library_manifest.json").string();
    if (fs::exists(lib_manifest)) manifest_path = lib_manifest;
  }
  LoadedDataset out;
  try {
    out.manifest = nlohmann::json::parse(read_text_file(manifest_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(manifest_path + ": " + e.what());
  }
  for (const bool test_pool : {false, true}) {
    const auto& list = out.manifest.at("library").at(test_pool ? "test" : "train");
    for (const auto& item : list) {
      ShapeTemplate tpl;
      tpl.template_id = item.at("id").get<std::string>();
      tpl.category = category_from_string(item.at("category").get<std::string>());
      tpl.test_pool = test_pool;
      tpl.surface_points =
          read_point_cloud((fs::path(dir) / item.at("file").get<std::string>()).string());
      (test_pool ? out.library.test : out.library.train).push_back(std::move(tpl));
    }
  }
  if (load_scenes && out.manifest.contains("scenes")) {
    for (const auto& item : out.manifest.at("scenes")) {
      Scene scene;
      scene.cloud =
          read_point_cloud((fs::path(dir) / item.at("file").get<std::string>()).string());
      scene.floor_w = item.at("floor_w").get<double>();
      scene.floor_d = item.at("floor_d").get<double>();
      scene.wall_height = item.at("wall_height").get<double>();
      for (const auto& obj : item.at("objects")) {
        ObjectRecord rec;
        rec.category = category_from_string(obj.at("category").get<std::string>());
        rec.template_id = obj.at("template_id").get<std::string>();
        rec.occluded = obj.at("occluded").get<bool>();
        scene.objects.push_back(std::move(rec));
      }
      out.scenes.push_back(std::move(scene));
    }
  }
  return out;
}

}  // namespace evobj
