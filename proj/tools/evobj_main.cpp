#include <map>
#include <string>

#include "CLI11.hpp"
#include "evobj/commands.hpp"
#include "evobj/log.hpp"

namespace {

std::string kebab(const std::string& key) {
  std::string out = key;
  for (char& c : out)
    if (c == '_') c = '-';
  return out;
}

struct SubcommandState {
  CLI::App* app = nullptr;
  std::string config_file;
  std::map<std::string, std::string> raw;
};

SubcommandState* add_subcommand(CLI::App& app, const evobj::RunConfig& defaults,
                                const std::string& name, const std::string& desc,
                                std::vector<std::unique_ptr<SubcommandState>>& states) {
  auto state = std::make_unique<SubcommandState>();
  state->app = app.add_subcommand(name, desc);
  state->app->add_option("--config", state->config_file, "JSON config file (flags override it)");
  for (const auto& [key, value] : defaults.values()) {
    state->raw[key];  // stable storage
    state->app->add_option("--" + kebab(key), state->raw[key],
                           "config key " + key + " (default " + value.dump() + ")");
  }
  SubcommandState* out = state.get();
  states.push_back(std::move(state));
  return out;
}

evobj::RunConfig resolve(const SubcommandState& state) {
  evobj::RunConfig cfg = evobj::RunConfig::defaults();
  if (!state.config_file.empty()) cfg.merge_file(state.config_file);
  for (const auto& [key, value] : state.raw)
    if (state.app->count("--" + kebab(key)) > 0) cfg.set_from_string(key, value);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"evobj: unsupervised object discovery on synthetic scene point clouds"};
  app.require_subcommand(1);
  const evobj::RunConfig defaults = evobj::RunConfig::defaults();
  std::vector<std::unique_ptr<SubcommandState>> states;

  SubcommandState* generate =
      add_subcommand(app, defaults, "generate", "build a library and compose a scene dataset", states);
  SubcommandState* build_library =
      add_subcommand(app, defaults, "build-library", "generate shape template pools", states);
  SubcommandState* pretrain = add_subcommand(app, defaults, "pretrain-discern",
                                             "stage-1 pretraining of the discerning module", states);
  SubcommandState* discover = add_subcommand(
      app, defaults, "discover", "train the search policy and evolve the discerning module", states);
  SubcommandState* evaluate =
      add_subcommand(app, defaults, "evaluate", "run inference on a dataset and score AP", states);
  SubcommandState* refine =
      add_subcommand(app, defaults, "refine", "plug-and-play refinement of external masks", states);
  SubcommandState* report =
      add_subcommand(app, defaults, "report", "print (and optionally plot) a report file", states);

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->app->parsed()) return evobj::cmd_generate(resolve(*generate));
    if (build_library->app->parsed()) return evobj::cmd_build_library(resolve(*build_library));
    if (pretrain->app->parsed()) return evobj::cmd_pretrain_discern(resolve(*pretrain));
    if (discover->app->parsed()) return evobj::cmd_discover(resolve(*discover));
    if (evaluate->app->parsed()) return evobj::cmd_evaluate(resolve(*evaluate));
    if (refine->app->parsed()) return evobj::cmd_refine(resolve(*refine));
    if (report->app->parsed()) return evobj::cmd_report(resolve(*report));
  } catch (const evobj::NotFound& e) {
    EVOBJ_ERROR("%s", e.what());
    return evobj::kExitMissingInput;
  } catch (const evobj::IoError& e) {
    EVOBJ_ERROR("%s", e.what());
    return evobj::kExitIoFailure;
  } catch (const evobj::ParseError& e) {
    EVOBJ_ERROR("%s", e.what());
    return evobj::kExitInvalidArgs;
  } catch (const evobj::InvalidArgument& e) {
    EVOBJ_ERROR("%s", e.what());
    return evobj::kExitInvalidArgs;
  } catch (const std::exception& e) {
    EVOBJ_ERROR("unexpected error: %s", e.what());
    return 1;
  }
  return 0;
}
