#pragma once

// Pipeline commands behind the CLI. Each reads its inputs from and writes its
// outputs under one run directory:
//
//   <out>/data/        episode_NNNN.ndjson, manifest.json        (gen-data)
//   <out>/model/       gnn.ckpt(+.manifest), loss_curve.csv,
//                      generalization.csv                      (train)
//   <out>/labels/      labels.ndjson                             (label)
//   <out>/regressor/   regressor.ckpt(+.manifest), report.csv    (train-regressor)
//   <out>/eval/        <task>_steps.csv, <task>_tau.csv,
//                      <task>_summary.csv                        (eval)
//   <out>/rollout/     <task>-<i>-<method>.ndjson               (rollout)
//
// A command refuses to write into an existing output directory unless
// `force` is set.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dynres/config.hpp"

namespace dynres {

struct CommandOptions {
  bool force = false;
  std::vector<std::string> modes;  // overrides eval.modes when non-empty
  std::vector<TaskKind> tasks{TaskKind::Gather};
  std::ostream *log = nullptr;     // progress lines; null = silent
};

void cmd_gen_data(const RunConfig &cfg, const std::filesystem::path &out, const CommandOptions &opts = {});
void cmd_train(const RunConfig &cfg, const std::filesystem::path &out, const CommandOptions &opts = {});
void cmd_label(const RunConfig &cfg, const std::filesystem::path &out, const CommandOptions &opts = {});
void cmd_train_regressor(const RunConfig &cfg, const std::filesystem::path &out, const CommandOptions &opts = {});
void cmd_eval(const RunConfig &cfg, const std::filesystem::path &out, const CommandOptions &opts = {});
void cmd_rollout(const RunConfig &cfg, const std::filesystem::path &out, const CommandOptions &opts = {});

// ---- building blocks (also used by tests) -----------------------------------

/// Episode `index` of the dataset for `cfg`; depends only on (cfg, index).
Episode generate_episode(const RunConfig &cfg, int index);

std::vector<Episode> load_dataset(const std::filesystem::path &data_dir);
GnnParams load_model(const std::filesystem::path &out);
ResolutionRegressor load_regressor(const std::filesystem::path &out);

/// Labels the states visited along `cfg.label.n_tasks` Gather scenes.
std::vector<LabelRecord> generate_labels(const RunConfig &cfg, const GnnParams &model, std::ostream *log = nullptr);

/// BO label of one (observation, goal) pair.
BoResult label_state(const RunConfig &cfg, const Observation &obs, const GoalSpec &goal, const GnnParams &model,
                     std::uint64_t seed);

struct MethodRun {
  std::string task_id;
  std::string method;
  EpisodeLog log;
};

struct SortRun {
  std::string task_id;
  std::string method;
  SortOutcome outcome;
};

struct SuiteResult {
  TaskKind kind = TaskKind::Gather;
  std::vector<std::string> methods;
  std::vector<MethodRun> runs;   // Gather / Redistribute
  std::vector<SortRun> sorts;    // Sort

  std::vector<const MethodRun *> runs_of(const std::string &method) const;
};

/// "dynamic", "fixed", "fixed:<w>", "oracle" -> method names ("dynamic", "fixed-50", "oracle").
std::vector<std::string> expand_modes(const RunConfig &cfg, const std::vector<std::string> &modes);

/// Runs every method on `cfg.eval.n_tasks` tasks of `kind`. `regressor` is
/// required for the dynamic method.
SuiteResult run_suite(const RunConfig &cfg, TaskKind kind, const std::vector<std::string> &methods,
                      const GnnParams &model, const ResolutionRegressor *regressor, std::ostream *log = nullptr);

/// Mean over steps 0..n of the distance curve (trapezoid-free average).
double curve_area(const EpisodeLog &log);
std::vector<double> tau_grid(const EvalConfig &cfg);

std::string steps_csv(const SuiteResult &r, const Provenance &prov);
std::string tau_csv(const SuiteResult &r, const EvalConfig &cfg, const Provenance &prov);
std::string summary_csv(const SuiteResult &r, const Provenance &prov);

}  // namespace dynres
