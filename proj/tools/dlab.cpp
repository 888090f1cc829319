#include <CLI11.hpp>

#include <iostream>

#include "dlab/errors.hpp"
#include "dlab/recipes.hpp"
#include "dlab/runner.hpp"

namespace {

// Exit codes: 0 success, 1 configuration error, 2 run failure.
constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRunError = 2;

int run_with_config(dlab::ExperimentConfig cfg) {
  dlab::RunManifest man = dlab::run_experiment(cfg);
  std::cout << man.kind << ": ok, " << man.artifacts.size() << " artifact(s) in " << cfg.out_dir
            << "\n";
  for (const auto& [k, v] : man.notes) std::cout << "  " << k << " = " << v << "\n";
  for (const auto& [k, v] : man.metrics) std::cout << "  " << k << " = " << v << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dlab: disentanglement-experiment laboratory"};
  app.require_subcommand(1);

  std::string config_path, out_dir, seeds, recipe_name;
  std::vector<std::string> sets;
  int jobs = 0;
  bool list_only = false, print_config = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "flat key = value config file");
    cmd->add_option("--set", sets, "override as key=value (repeatable)");
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--seeds", seeds, "comma-separated seed list");
    cmd->add_option("--jobs", jobs, "max concurrent jobs");
  };

  std::vector<CLI::App*> kind_cmds;
  for (const auto& kind : dlab::experiment_kinds()) {
    CLI::App* cmd = app.add_subcommand(kind, "run a " + kind + " experiment");
    add_common(cmd);
    kind_cmds.push_back(cmd);
  }

  CLI::App* recipes_cmd = app.add_subcommand("recipes", "list or run built-in recipes");
  recipes_cmd->add_option("--name", recipe_name, "recipe to run");
  recipes_cmd->add_flag("--list", list_only, "list recipes and exit");
  recipes_cmd->add_flag("--print", print_config, "print the recipe config and exit");
  add_common(recipes_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    std::vector<std::string> overrides;
    if (!seeds.empty()) overrides.push_back("seeds = " + seeds);
    if (jobs > 0) overrides.push_back("jobs = " + std::to_string(jobs));
    if (!out_dir.empty()) overrides.push_back("out = " + out_dir);

    if (recipes_cmd->parsed()) {
      if (recipe_name.empty() || list_only) {
        for (const auto& r : dlab::recipes()) {
          std::cout << r.name << "\t" << r.description << "\n";
        }
        return kOk;
      }
      const dlab::Recipe& recipe = dlab::find_recipe(recipe_name);
      std::vector<std::string> all = sets;
      all.insert(all.end(), overrides.begin(), overrides.end());
      dlab::ExperimentConfig cfg = dlab::parse_config_text(recipe.config_text, all);
      if (print_config) {
        std::cout << dlab::serialize_config(cfg);
        return kOk;
      }
      return run_with_config(cfg);
    }

    for (std::size_t i = 0; i < kind_cmds.size(); ++i) {
      if (!kind_cmds[i]->parsed()) continue;
      std::vector<std::string> all = sets;
      all.push_back("experiment.kind = " + dlab::experiment_kinds()[i]);
      all.insert(all.end(), overrides.begin(), overrides.end());
      dlab::ExperimentConfig cfg = dlab::parse_config(config_path, all);
      return run_with_config(cfg);
    }
    std::cerr << "no subcommand selected\n";
    return kConfigError;
  } catch (const dlab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "run error: " << e.what() << "\n";
    return kRunError;
  }
}
