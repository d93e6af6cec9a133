#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dynres/commands.hpp"

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "run";
  std::vector<std::string> modes;
  std::vector<std::string> tasks;
  bool force = false;
  bool quiet = false;
};

}  // namespace

int main(int argc, char **argv) {
  using namespace dynres;
  CLI::App app{"Resolution-adaptive granular pile manipulation pipeline"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand
  Flags f;
  app.add_option("--config", f.config, "JSON run configuration (flags override its values)");
  app.add_option("--seed", f.seed, "master seed");
  app.add_option("--out", f.out, "run directory")->capture_default_str();
  app.add_option("--mode", f.modes, "dynamic | fixed | fixed:<omega> | oracle (repeatable)");
  app.add_option("--tasks", f.tasks, "gather | redistribute | sort (repeatable)");
  app.add_flag("--force", f.force, "overwrite existing outputs");
  app.add_flag("--quiet", f.quiet, "suppress progress output");

  using Cmd = void (*)(const RunConfig &, const std::filesystem::path &, const CommandOptions &);
  const std::vector<std::pair<std::string, Cmd>> commands = {
      {"gen-data", cmd_gen_data}, {"train", cmd_train},   {"label", cmd_label},
      {"train-regressor", cmd_train_regressor}, {"eval", cmd_eval}, {"rollout", cmd_rollout}};
  const std::vector<std::string> help = {
      "generate random-push episodes", "train the dynamics model", "generate resolution labels",
      "fit the resolution regressor", "run the task suite and write reports", "log one MPC episode per task"};
  for (std::size_t i = 0; i < commands.size(); ++i) app.add_subcommand(commands[i].first, help[i]);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  RunConfig cfg;
  CommandOptions opts;
  Cmd run = nullptr;
  try {
    cfg = f.config.empty() ? default_config() : load_config(f.config);
    if (f.seed) cfg.seed = *f.seed;
    cfg.validate();
    opts.force = f.force;
    opts.modes = f.modes;
    if (!f.tasks.empty()) {
      opts.tasks.clear();
      for (const auto &t : f.tasks) opts.tasks.push_back(parse_task_kind(t));
    }
    if (!opts.modes.empty()) expand_modes(cfg, opts.modes);
    if (!f.quiet) opts.log = &std::cerr;
    for (const auto &[name, fn] : commands)
      if (app.got_subcommand(name)) run = fn;
  } catch (const std::exception &e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  }

  try {
    run(cfg, f.out, opts);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
