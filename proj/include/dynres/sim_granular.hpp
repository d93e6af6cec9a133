#pragma once

// Kinematic 2D pile simulator: disks on a plane pushed by a straight sweep of
// a flat pusher. Ground truth for dataset generation and closed-loop runs.

#include <cstdint>
#include <vector>

#include "dynres/geometry.hpp"
#include "dynres/util.hpp"

namespace dynres {

/// Straight push: the pusher (segment of `pusher_width`, normal to the push
/// direction, centered on the path) moves from `start` by `length` along
/// `angle`.
struct Action {
  Vec2 start;
  double angle = 0.0;  // radians, [0, 2pi)
  double length = 0.0;
  double pusher_width = 0.06;

  Vec2 direction() const { return {std::cos(angle), std::sin(angle)}; }
  Vec2 normal() const { return {-std::sin(angle), std::cos(angle)}; }
  Vec2 end() const { return start + direction() * length; }
  bool operator==(const Action &) const = default;
};

/// Sweep-frame coordinates of a point: `along` from the start line, `across`
/// from the push centerline.
struct SweepCoords {
  double along = 0.0;
  double across = 0.0;
};

SweepCoords sweep_coords(const Action &a, Vec2 p);
/// Center strictly-or-on the swept rectangle [0, length] x [-w/2, w/2].
bool in_sweep(const Action &a, Vec2 p);

struct ActionBounds {
  double len_min = 0.04;
  double len_max = 0.25;
  double pusher_width = 0.06;
};

enum class Layout { Uniform, Blob, MultiBlob };

struct MaterialDynamics {
  double spread = 1.0;  // multiplier on spread_sigma
  double carry = 1.0;   // fraction of the sweep displacement realised
};

struct SimConfig {
  int n_pieces = 100;
  double piece_radius = 0.005;
  double repulsion_radius = 0.01;  // minimum center separation after a push
  double spread_sigma = 0.004;
  double max_push_carry = 0.2;
  Rect workspace{{0.0, 0.0}, {0.5, 0.5}};
  int grid_rows = 64;
  int grid_cols = 64;
  ActionBounds action;

  Layout layout = Layout::Uniform;
  // Blob layouts: centers are sampled inside the workspace shrunk by
  // `blob_margin` unless `blob_centers` is set.
  int n_blobs = 1;
  double blob_radius = 0.05;
  double blob_margin = 0.1;
  std::vector<Vec2> blob_centers;
  // Uniform layout samples inside the workspace shrunk by this margin.
  double uniform_margin = 0.03;

  int n_materials = 1;
  bool material_per_blob = true;  // blob b -> material b % n_materials
  std::vector<MaterialDynamics> materials{{1.0, 1.0}, {2.0, 1.0}, {0.5, 0.9}};

  int relax_max_iters = 400;
  double relax_tol = 1e-7;

  void validate() const;
};

struct PileState {
  std::vector<Vec2> positions;
  std::vector<int> material;
  double piece_radius = 0.005;
  Rect workspace{{0.0, 0.0}, {0.5, 0.5}};
  std::uint64_t rng_seed = 0;
  int step = 0;  // number of pushes applied; keys the scatter noise

  std::size_t size() const { return positions.size(); }
  void validate() const;
};

/// Occupancy raster plus the segmented foreground point set.
struct Observation {
  std::vector<std::uint8_t> occupancy;  // rows x cols, row-major
  std::vector<Vec2> points;             // piece centers, meters
  std::vector<int> labels;
  PixelTransform transform;
  double piece_radius = 0.005;

  int rows() const { return transform.rows; }
  int cols() const { return transform.cols; }
  std::uint8_t at(int r, int c) const { return occupancy[static_cast<std::size_t>(r) * cols() + c]; }
  std::size_t occupied_count() const;
  /// Pixel-space centers of occupied cells, row-major order.
  std::vector<Vec2> occupied_pixels() const;
};

PileState init_scene(const SimConfig &config, std::uint64_t seed);
PileState apply_push(const SimConfig &config, const PileState &state, const Action &action);
Observation observe(const SimConfig &config, const PileState &state);

/// Rasterizes an arbitrary labeled point set onto the config's grid.
Observation rasterize(const SimConfig &config, std::vector<Vec2> points,
                      std::vector<int> labels);
/// Observation containing only pieces with the given material label.
Observation restrict_material(const SimConfig &config, const Observation &obs, int material);

/// Iterative pairwise separation until no pair is closer than
/// `config.repulsion_radius` (within relax_tol), with workspace clamping.
/// Returns the number of sweeps performed.
int relax_overlaps(const SimConfig &config, std::vector<Vec2> &positions,
                   std::uint64_t seed, int step);

/// Uniform action sample inside the configured bounds.
Action sample_action(const SimConfig &config, Rng &rng);
/// Push aimed at a random piece: the sweep passes over it with random angle,
/// length and lateral offset. Used for random-action dataset episodes.
Action sample_targeted_action(const SimConfig &config, const PileState &state, Rng &rng);
/// Clamps start to the workspace, wraps the angle and clamps the length.
Action clamp_action(const SimConfig &config, Action a);

PixelTransform grid_transform(const SimConfig &config);

}  // namespace dynres
