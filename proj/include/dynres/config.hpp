#pragma once

// Run configuration: one JSON document with a section per module. Every
// field has a default, unknown keys are rejected, and the canonical dump of
// the effective configuration is hashed into every output file.

#include <cstdint>
#include <string>
#include <vector>

#include "dynres/episode_io.hpp"
#include "dynres/gnn_dynamics.hpp"
#include "dynres/perception.hpp"
#include "dynres/planner_mpc.hpp"
#include "dynres/resolution_selector.hpp"
#include "dynres/sim_granular.hpp"
#include "dynres/tasks.hpp"

namespace dynres {

struct DataConfig {
  int n_episodes = 200;
  int steps = 20;
  int n_materials = 3;
  double targeted_fraction = 0.8;  // share of pushes aimed at a piece
};

struct LabelConfig {
  int n_tasks = 20;          // Gather scenes to label
  int states_per_task = 3;   // labeled states along each scene's trajectory
  int steps_between = 6;     // MPC steps between labeled states
  int drive_omega = 50;      // fixed resolution used to advance the scene
  double regularizer_weight = 1e-3;
  int omega_ref = 100;
  BoConfig bo;
};

struct EvalConfig {
  int n_tasks = 10;
  int mpc_steps = 20;
  std::vector<int> fixed_omegas{10, 25, 50, 75, 100};
  std::vector<std::string> modes{"dynamic", "fixed"};  // "dynamic", "fixed", "fixed:<w>", "oracle"
  double success_threshold = 0.0;  // 0 disables early stop
  double tau_min = 0.5;
  double tau_max = 6.0;
  int tau_count = 23;
  std::uint64_t task_seed = 1000;
};

struct RunConfig {
  std::uint64_t seed = 0;
  SimConfig sim;
  DataConfig data;
  PerceptionParams perception;
  GnnConfig model;
  TrainConfig train;
  PlannerConfig planner;
  ComputeBudget budget;
  LabelConfig label;
  RegressorConfig regressor;
  TaskConfig task;
  EvalConfig eval;
  SortExecConfig sort;

  void validate() const;
  MpcConfig mpc() const;
};

RunConfig default_config();

/// Parses `text` over the defaults; throws std::invalid_argument on unknown
/// keys or type mismatches.
RunConfig parse_config(const std::string &text);
RunConfig load_config(const std::filesystem::path &path);

/// Canonical JSON of the effective configuration (fixed key order).
std::string dump_config(const RunConfig &cfg);
std::string config_hash(const RunConfig &cfg);
Provenance provenance(const RunConfig &cfg);

}  // namespace dynres
