#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fbsg/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Regime-switching stochastic differential game toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  int paths = 0, steps = 0, workers = -1;
  bool seed_set = false, paths_set = false, steps_set = false;

  std::vector<CLI::App*> subs;
  for (const char* task : fbsg::kKnownTasks) {
    CLI::App* sub = app.add_subcommand(task);
    sub->add_option("--config", config_path, "scenario config file")->required();
    sub->add_option("--seed", seed)->each([&](const std::string&) { seed_set = true; });
    sub->add_option("--paths", paths)->each([&](const std::string&) { paths_set = true; });
    sub->add_option("--steps", steps)->each([&](const std::string&) { steps_set = true; });
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--workers", workers, "worker threads (0 = hardware)");
    subs.push_back(sub);
  }

  CLI11_PARSE(app, argc, argv);
  const std::string task = app.get_subcommands().front()->get_name();

  fbsg::ConfigResult loaded = fbsg::load_config(config_path);
  if (!loaded.ok()) {
    for (const auto& v : loaded.violations) std::cerr << v << "\n";
    return 2;
  }

  fbsg::RunOverrides overrides;
  overrides.out = out_dir;
  if (seed_set) overrides.seed = seed;
  if (paths_set) overrides.paths = paths;
  if (steps_set) overrides.steps = steps;
  if (workers >= 0) overrides.workers = workers;

  try {
    return fbsg::run_task(loaded.config, task, overrides);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
