#pragma once

// High-level Sort planning in a blob world: every material pile is a disk of
// fixed radius whose center moves one grid step at a time.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dynres/geometry.hpp"
#include "dynres/sim_granular.hpp"

namespace dynres {

struct GridCell {
  int i = 0;  // column
  int j = 0;  // row
  bool operator==(const GridCell &) const = default;
  auto operator<=>(const GridCell &) const = default;
};

/// Sparse grid in pixel space: point (i, j) sits at origin + pitch * (i, j).
struct SparseGrid {
  Vec2 origin;
  double pitch = 1.0;
  int nx = 0;
  int ny = 0;

  Vec2 point(GridCell c) const { return origin + Vec2{c.i * pitch, c.j * pitch}; }
  bool contains(GridCell c) const { return c.i >= 0 && c.j >= 0 && c.i < nx && c.j < ny; }
  GridCell snap(Vec2 px) const;
};

/// Grid with pitch 2 * radius covering the pixel frame with a radius margin.
SparseGrid make_sparse_grid(const PixelTransform &transform, double radius_px, double pitch_factor = 2.0);

struct BlobWorld {
  SparseGrid grid;
  double radius = 1.0;  // pixels
  std::vector<GridCell> centers;

  bool collision_free(const std::vector<GridCell> &centers) const;
};

struct BlobEstimate {
  std::vector<GridCell> centers;  // per material label 0..k-1
  std::vector<Vec2> centroids;    // unsnapped, pixels
};

/// Per material label, centroid of its foreground pieces snapped to the grid.
BlobEstimate blob_extract(const Observation &obs, const SparseGrid &grid, int n_materials);

struct AstarConfig {
  bool eight_connected = false;
  double step_cost = 1.0;
  std::size_t max_expansions = 2'000'000;
};

struct SortMove {
  int blob = 0;
  GridCell from;
  GridCell to;
};

struct SortPlan {
  bool solvable = false;
  std::vector<std::vector<GridCell>> nodes;  // start .. goal
  std::vector<SortMove> moves;
  double cost = 0.0;
  std::size_t expansions = 0;
};

/// Expanded nodes with their g and h values, for admissibility checks.
struct AstarTrace {
  struct Entry {
    std::vector<GridCell> node;
    double g = 0.0;
    double h = 0.0;
  };
  std::vector<Entry> expanded;
};

double sort_heuristic(const std::vector<GridCell> &node, const std::vector<GridCell> &goal,
                      const AstarConfig &cfg);

/// Single-blob one-step successors that stay in bounds and collision free.
std::vector<std::pair<SortMove, std::vector<GridCell>>> sort_neighbors(
    const BlobWorld &world, const std::vector<GridCell> &node, const AstarConfig &cfg);

/// Minimal-step plan from world.centers to `goal`; solvable = false if none.
SortPlan astar(const BlobWorld &world, const std::vector<GridCell> &goal, const AstarConfig &cfg,
               AstarTrace *trace = nullptr);

/// Checks the plan invariants (one blob, one grid step, collision free).
bool valid_plan(const BlobWorld &world, const SortPlan &plan, const AstarConfig &cfg);

struct Subgoal {
  int blob = 0;
  GridCell cell;
  std::vector<GridCell> centers_before;  // all blob centers when the subgoal starts
};

/// Merges runs of the same blob's moves (at most `merge_horizon` per waypoint).
std::vector<Subgoal> to_subgoals(const SortPlan &plan, int merge_horizon);

std::string sort_plan_ndjson(const SortPlan &plan);

}  // namespace dynres
