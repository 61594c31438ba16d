#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "evobj/config.hpp"
#include "evobj/scenegen.hpp"

namespace evobj {

struct DiscardEvent {
  std::uint32_t scene = 0;
  std::uint32_t attempts = 0;  // discarded seeds before the accepted one
};

struct GeneratedScenes {
  std::vector<Scene> scenes;
  std::vector<DiscardEvent> discards;
};

// Draws fresh derived seeds per scene slot until compose_scene accepts,
// logging discards, so the output always holds exactly `count` scenes.
GeneratedScenes generate_scenes(const std::vector<ShapeTemplate>& pool,
                                const SceneGenConfig& cfg, std::uint32_t count,
                                std::uint64_t seed, std::uint32_t workers = 1);

SceneGenConfig scene_config_from(const RunConfig& cfg);

// Dataset directory layout:
//   manifest.json
//   library/{train,test}/tpl_<id>.bin
//   scenes/scene_<00000>.bin
void write_dataset(const std::string& dir, const ShapeLibrary& library,
                   const GeneratedScenes& generated, const RunConfig& cfg);

void write_library_dir(const std::string& dir, const ShapeLibrary& library,
                       nlohmann::json& manifest_out, const std::string& rel_prefix = "");

struct LoadedDataset {
  std::vector<Scene> scenes;
  ShapeLibrary library;
  nlohmann::json manifest;
};

LoadedDataset load_dataset(const std::string& dir, bool load_scenes = true);

}  // namespace evobj
