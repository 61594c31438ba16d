#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "evobj/commands.hpp"
#include "evobj/config.hpp"
#include "evobj/pointio.hpp"

using namespace evobj;
namespace fs = std::filesystem;

TEST_CASE("RunConfig defaults, merging, and rejection of unknown keys") {
  RunConfig cfg = RunConfig::defaults();
  CHECK(cfg.get_f64("cd_threshold") == 0.10);
  CHECK(cfg.get_f64("tau") == 0.05);
  CHECK(cfg.get_u32("evolve_interval") == 100);
  CHECK(cfg.get_u32("horizon") == 10);
  CHECK(cfg.get_f64("ppo_clip") == 0.2);
  CHECK(cfg.get_f64("theta") == 0.5);

  CHECK_THROWS_AS(cfg.set("not_a_key", 1), InvalidArgument);
  CHECK_THROWS_AS(cfg.get_f64("nope"), InvalidArgument);

  cfg.set_from_string("tau", "0.07");
  CHECK(cfg.get_f64("tau") == 0.07);
  cfg.set_from_string("pool", "test");
  CHECK(cfg.get_str("pool") == "test");
  CHECK_THROWS_AS(cfg.set_from_string("tau", "abc"), InvalidArgument);

  const auto dir = fs::temp_directory_path() / "evobj_cfg_test";
  fs::create_directories(dir);
  const std::string good = (dir / "good.json").string();
  write_text_file(good, "{\"seed\": 7, \"epochs\": 42}\n");
  RunConfig from_file = RunConfig::defaults();
  from_file.merge_file(good);
  CHECK(from_file.get_u64("seed") == 7);
  CHECK(from_file.get_u32("epochs") == 42);

  const std::string bad = (dir / "bad.json").string();
  write_text_file(bad, "{\"unknown_key\": 1}\n");
  RunConfig rejecting = RunConfig::defaults();
  CHECK_THROWS_AS(rejecting.merge_file(bad), InvalidArgument);

  const std::string malformed = (dir / "malformed.json").string();
  write_text_file(malformed, "{nope\n");
  CHECK_THROWS_AS(rejecting.merge_file(malformed), ParseError);

  // resolved config round-trips
  const std::string resolved = from_file.resolved_json();
  const std::string rt = (dir / "resolved.json").string();
  write_text_file(rt, resolved);
  RunConfig back = RunConfig::defaults();
  back.merge_file(rt);
  CHECK(back.resolved_json() == resolved);
  fs::remove_all(dir);
}

TEST_CASE("category list parsing") {
  RunConfig cfg = RunConfig::defaults();
  CHECK(categories_from(cfg).size() == 6);
  cfg.set("categories", "chair,rifle");
  const auto cats = categories_from(cfg);
  REQUIRE(cats.size() == 2);
  CHECK(cats[0] == Category::Chair);
  CHECK(cats[1] == Category::Rifle);
  cfg.set("categories", "chair,boat");
  CHECK_THROWS_AS(categories_from(cfg), InvalidArgument);
}

TEST_CASE("masks interchange format round trip") {
  std::vector<MaskFileEntry> entries;
  MaskFileEntry e;
  e.scene_id = 3;
  e.masks = {{1, 2, 3}, {10, 11}};
  e.confidences = {0.75, 0.5};
  entries.push_back(e);
  const std::string text = masks_to_json(entries);
  const auto back = parse_masks_file(text);
  REQUIRE(back.size() == 1);
  CHECK(back[0].scene_id == 3);
  CHECK(back[0].masks == entries[0].masks);
  CHECK(back[0].confidences == entries[0].confidences);

  CHECK_THROWS_AS(parse_masks_file("{\"not\": \"an array\"}"), ParseError);
  CHECK_THROWS_AS(parse_masks_file("[{bad json"), ParseError);
}

TEST_CASE("generate -> pretrain -> discover -> evaluate pipeline on a micro config") {
  const auto dir = fs::temp_directory_path() / "evobj_cli_micro";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string dataset = (dir / "data").string();
  const std::string ckpt_dir = (dir / "pretrain").string();
  const std::string run_dir = (dir / "run").string();
  const std::string eval_dir = (dir / "eval").string();

  RunConfig gen = RunConfig::defaults();
  gen.set("out", dataset);
  gen.set("scenes", 2);
  gen.set("per_category", 2);
  gen.set("categories", "chair,cabinet");
  CHECK(cmd_generate(gen) == kExitOk);
  CHECK(fs::exists(fs::path(dataset) / "manifest.json"));
  CHECK(fs::exists(fs::path(dataset) / "scenes" / "scene_00000.bin"));

  const LoadedDataset loaded = load_dataset(dataset);
  CHECK(loaded.scenes.size() == 2);
  CHECK(loaded.library.train.size() == 4);
  CHECK(loaded.scenes[0].cloud.size() == 20000);

  RunConfig pre = RunConfig::defaults();
  pre.set("out", ckpt_dir);
  pre.set("dataset", dataset);
  pre.set("pretrain_epochs", 2);
  pre.set("holdout_fraction", 0.5);
  CHECK(cmd_pretrain_discern(pre) == kExitOk);
  CHECK(fs::exists(fs::path(ckpt_dir) / "discern.json"));

  RunConfig disc = RunConfig::defaults();
  disc.set("out", run_dir);
  disc.set("dataset", dataset);
  disc.set("checkpoint", (fs::path(ckpt_dir) / "discern.json").string());
  disc.set("epochs", 2);
  disc.set("horizon", 3);
  disc.set("evolve_interval", 2);
  disc.set("yaw_bins", 12);
  disc.set("query_cap", 48);
  disc.set("template_cap", 512);
  disc.set("diagnostics", true);
  CHECK(cmd_discover(disc) == kExitOk);
  CHECK(fs::exists(fs::path(run_dir) / "policy.json"));
  CHECK(fs::exists(fs::path(run_dir) / "ledger.json"));
  const std::string log_text = read_text_file((fs::path(run_dir) / "log.ndjson").string());
  CHECK(log_text.find("\"epoch\":1") != std::string::npos);

  RunConfig ev = RunConfig::defaults();
  ev.set("out", eval_dir);
  ev.set("dataset", dataset);
  ev.set("run", run_dir);
  ev.set("eval_episodes", 2);
  ev.set("yaw_bins", 12);
  ev.set("query_cap", 48);
  ev.set("template_cap", 512);
  CHECK(cmd_evaluate(ev) == kExitOk);
  CHECK(fs::exists(fs::path(eval_dir) / "report.json"));
  CHECK(fs::exists(fs::path(eval_dir) / "report.csv"));
  const auto report = nlohmann::json::parse(read_text_file((fs::path(eval_dir) / "report.json").string()));
  CHECK(report.at("ap25").get<double>() >= report.at("ap50").get<double>());
  CHECK(report.at("ap50").get<double>() >= report.at("ap").get<double>());

  // refine on the predictions file round-trips the format
  RunConfig ref = RunConfig::defaults();
  ref.set("out", (dir / "refined.json").string());
  ref.set("dataset", dataset);
  ref.set("checkpoint", (fs::path(ckpt_dir) / "discern.json").string());
  ref.set("masks", (fs::path(eval_dir) / "predictions.json").string());
  CHECK(cmd_refine(ref) == kExitOk);
  const auto refined = parse_masks_file(read_text_file((dir / "refined.json").string()));
  CHECK(refined.size() == loaded.scenes.size());

  // missing inputs surface as NotFound
  RunConfig missing = RunConfig::defaults();
  missing.set("out", (dir / "x").string());
  missing.set("dataset", (dir / "missing").string());
  CHECK_THROWS_AS(cmd_pretrain_discern(missing), NotFound);

  fs::remove_all(dir);
}
