#pragma once

// Sampling + gradient trajectory optimization and the closed MPC loop.

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dynres/episode_io.hpp"
#include "dynres/gnn_dynamics.hpp"
#include "dynres/objective.hpp"
#include "dynres/perception.hpp"
#include "dynres/sim_granular.hpp"

namespace dynres {

/// Abstract per-call compute allowance. One optimization iteration at
/// resolution w costs w + k w (nodes plus estimated edges).
struct ComputeBudget {
  double total = 10000.0;
  int edges_per_node = 8;

  double cost(int omega) const;
  /// max(1, floor(total / cost(omega))).
  int iterations(int omega) const;
  void validate() const;
};

struct PlannerConfig {
  int samples = 20;          // M
  int horizon = 1;           // T
  double step = 0.02;        // initial step length in scaled action space (meters)
  double min_step = 2.5e-4;  // stop descending once the step shrinks below this
  double angle_scale = 0.05; // meters per radian when normalizing the step
  bool targeted = true;      // sample starts behind pieces instead of anywhere
  void validate() const;
};

struct PlanResult {
  std::vector<Action> actions;
  double cost = 0.0;
  double best_initial_cost = 0.0;
  std::vector<double> initial_costs;  // per sample, before descent
  std::vector<double> final_costs;    // per sample, after descent
  int omega = 0;
  int iterations = 0;
};

/// Particles sampled from `obs` at resolution `omega` (edges left empty).
ParticleGraph sample_particles(const Observation &obs, int omega, const PerceptionParams &perception);

/// Task objective after rolling `actions` through the model from `particles`.
double rollout_cost(const ParticleGraph &particles, const std::vector<Action> &actions,
                    const GnnParams &model, const PerceptionParams &perception, const GoalSpec &goal);

PlanResult plan_actions(const SimConfig &sim, const Observation &obs, int omega, const GoalSpec &goal,
                        const GnnParams &model, const PerceptionParams &perception,
                        const PlannerConfig &config, int iterations, std::uint64_t seed);

struct MpcStep {
  int step = 0;
  int omega_requested = 0;
  int omega = 0;  // after the foreground-size clamp
  Action action;
  double planned_cost = 0.0;
  double distance = 0.0;  // normalized distribution distance after the action
};

struct EpisodeLog {
  double initial_distance = 0.0;
  std::vector<MpcStep> steps;
  bool success = false;

  double final_distance() const { return steps.empty() ? initial_distance : steps.back().distance; }
  /// Distances at steps 0..n (initial first).
  std::vector<double> distance_curve() const;
};

/// Chooses the resolution for the current observation.
using ResolutionPolicy = std::function<int(const Observation &, const GoalSpec &)>;

struct MpcConfig {
  int steps = 20;
  double success_threshold = -std::numeric_limits<double>::infinity();
  PlannerConfig planner;
  ComputeBudget budget;
};

/// Runs the loop on `env` (mutated in place). When `material` is set only that
/// material's foreground is observed and scored.
EpisodeLog run_mpc(const SimConfig &sim, PileState &env, const GoalSpec &goal, const GnnParams &model,
                   const PerceptionParams &perception, const ResolutionPolicy &policy,
                   const MpcConfig &config, std::uint64_t seed, std::optional<int> material = {});

/// Observation of `state`, restricted to `material` when set.
Observation observe_for(const SimConfig &sim, const PileState &state, std::optional<int> material);

std::string serialize_mpc_log(const EpisodeLog &log, const Provenance &prov);

}  // namespace dynres
