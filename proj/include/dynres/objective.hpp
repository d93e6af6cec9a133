#pragma once

// Goal representation and the point-set costs used for planning and scoring.
// All distances are in pixel units of the goal's transform.

#include <vector>

#include "dynres/autodiff.hpp"
#include "dynres/geometry.hpp"
#include "dynres/sim_granular.hpp"

namespace dynres {

struct GoalSpec {
  std::vector<std::uint8_t> heatmap;  // rows x cols, row-major, 0/1
  std::vector<Vec2> goal_points;      // cell centers where heatmap == 1
  std::vector<Vec2> goal_subset;      // FPS subset of goal_points
  PixelTransform transform;

  std::size_t size() const { return goal_points.size(); }
};

/// Builds Q from the heatmap and Q' by FPS of min(subset_size, |Q|) points.
/// Throws on an empty heatmap.
GoalSpec make_goal(std::vector<std::uint8_t> heatmap, const PixelTransform &transform,
                   int subset_size);

/// Disk-shaped heatmap: cells whose center lies within `radius_m` of `center_m`.
std::vector<std::uint8_t> disk_heatmap(const PixelTransform &transform, Vec2 center_m, double radius_m);

/// c(P) = sum_p min_q |p - q| + sum_{q in Q'} min_p |p - q|, P in meters.
double task_objective(const std::vector<Vec2> &particles, const GoalSpec &goal);

/// Same value built on a tape from an n x 2 matrix of meter positions.
ad::Var task_objective_tape(ad::Tape &tape, ad::Var positions, const GoalSpec &goal);

/// Symmetric nearest-neighbour sum between occupied cells and all of Q,
/// divided by |F| + |Q| when `normalized`.
double distribution_distance(const Observation &obs, const GoalSpec &goal, bool normalized = true);
double distribution_distance(const std::vector<Vec2> &foreground_px, const GoalSpec &goal,
                             bool normalized = true);

/// Fraction of distances strictly below `threshold`.
double task_score(const std::vector<double> &final_distances, double threshold);

}  // namespace dynres
