#pragma once

// Seeded task instances: Gather (pile to a disk), Redistribute (pile to a
// letter shape) and Sort (two materials to two disks via the blob planner).

#include <cstdint>
#include <string>
#include <vector>

#include "dynres/objective.hpp"
#include "dynres/planner_mpc.hpp"
#include "dynres/sim_granular.hpp"
#include "dynres/sort_planner.hpp"

namespace dynres {

enum class TaskKind { Gather, Redistribute, Sort };

TaskKind parse_task_kind(const std::string &s);
std::string task_kind_name(TaskKind k);

struct TaskConfig {
  // gather
  Layout gather_layout = Layout::Uniform;
  double gather_spread_margin = 0.05;  // uniform layout margin
  double goal_radius = 0.06;
  double goal_margin = 0.1;
  // redistribute
  double letter_size = 0.2;
  double letter_stroke = 0.035;
  double redistribute_pile_radius = 0.07;
  // sort
  double sort_blob_radius = 0.05;
  double sort_goal_radius = 0.045;
  int sort_pieces_per_material = 40;
  // all tasks
  int goal_subset = 200;  // FPS goal subset size, clamped to the goal size
};

struct TaskInstance {
  TaskKind kind = TaskKind::Gather;
  std::string id;
  SimConfig sim;
  PileState start;
  GoalSpec goal;  // Gather / Redistribute; the union of both disks for Sort
  // Sort only
  BlobWorld blobs;
  std::vector<GridCell> blob_goal;
  std::vector<GoalSpec> material_goals;
};

/// Filled letter heatmap ('J', 'T' or 'U') with its box centered at `center_m`.
std::vector<std::uint8_t> letter_heatmap(const PixelTransform &t, char letter, Vec2 center_m,
                                         double size_m, double stroke_m);

TaskInstance make_task(TaskKind kind, const SimConfig &base, const TaskConfig &cfg, std::uint64_t seed,
                       int index);

struct SortExecConfig {
  int merge_horizon = 3;
  double subgoal_threshold = 2.0;  // normalized distance that completes a waypoint
  int max_steps_per_subgoal = 6;
  int final_steps = 6;             // per material, toward its final disk
  double task_threshold = 2.5;     // per-material success distance
  AstarConfig astar;
  MpcConfig mpc;
};

struct SortOutcome {
  SortPlan plan;
  std::vector<EpisodeLog> logs;         // one per executed subgoal / refinement
  std::vector<double> final_distances;  // per material
  bool success = false;
  int total_steps = 0;
};

/// Plans blob moves with A*, then drives each waypoint with material-restricted MPC.
SortOutcome run_sort_task(const TaskInstance &task, const TaskConfig &cfg, const GnnParams &model,
                          const PerceptionParams &perception, const ResolutionPolicy &policy,
                          const SortExecConfig &exec, std::uint64_t seed);

}  // namespace dynres
