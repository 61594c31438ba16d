#pragma once

#include <string>

#include "evobj/config.hpp"
#include "evobj/dataset.hpp"
#include "evobj/discern.hpp"
#include "evobj/eval.hpp"
#include "evobj/policy.hpp"
#include "evobj/prior.hpp"

namespace evobj {

// Exit codes shared by the CLI and the command layer.
constexpr int kExitOk = 0;
constexpr int kExitInvalidArgs = 2;
constexpr int kExitMissingInput = 3;
constexpr int kExitIoFailure = 4;

int cmd_generate(const RunConfig& cfg);
int cmd_build_library(const RunConfig& cfg);
int cmd_pretrain_discern(const RunConfig& cfg);
int cmd_discover(const RunConfig& cfg);
int cmd_evaluate(const RunConfig& cfg);
int cmd_refine(const RunConfig& cfg);
int cmd_report(const RunConfig& cfg);

// Shared helpers (also used by the acceptance suite).
std::vector<Category> categories_from(const RunConfig& cfg);
PriorConfig prior_config_from(const RunConfig& cfg);
DiscoveryConfig discovery_config_from(const RunConfig& cfg);
TrainConfig pretrain_config_from(const RunConfig& cfg);
PriorLibrary build_discovery_prior(const std::vector<ShapeTemplate>& train_pool,
                                   const RunConfig& cfg);

// Inference over scenes with a trained policy: rolls episodes, accumulates
// valid candidates, no learning. Returns the eval-time ledger.
Ledger discover_candidates(const std::vector<Scene>& scenes, const PolicyParams& policy,
                           const DiscernModel& model, const PriorLibrary& prior,
                           const DiscoveryConfig& cfg, std::uint32_t episodes_per_scene,
                           std::uint64_t seed);

void save_policy(const PolicyParams& policy, const std::string& path);
PolicyParams load_policy(const std::string& path);

nlohmann::json report_to_json(const EvalReport& report);
std::string report_to_csv(const EvalReport& report);
std::string epoch_log_to_ndjson(const std::vector<EpochLog>& log);

// Mask interchange format shared by predictions, ledger exports, and the
// refiner: [{"scene_id": n, "masks": [{"indices": [...], "confidence": x}]}]
struct MaskFileEntry {
  std::uint32_t scene_id = 0;
  std::vector<std::vector<std::uint32_t>> masks;
  std::vector<double> confidences;
};
std::vector<MaskFileEntry> parse_masks_file(const std::string& text);
std::string masks_to_json(const std::vector<MaskFileEntry>& entries);

}  // namespace evobj
