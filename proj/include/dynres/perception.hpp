#pragma once

// Observation -> particle graph at a chosen resolution.
//
//   segment_foreground -> fps -> center_bias -> sweep_displacements
//   -> build_edges (on the sweep-shifted positions)
//
// The graph keeps the center-biased, unshifted positions; only the edge set
// is computed from the shifted ones.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dynres/geometry.hpp"
#include "dynres/sim_granular.hpp"

namespace dynres {

struct PerceptionParams {
  double r_center = 0.02;
  double r_edge = 0.06;
  int k = 8;

  void validate() const;
};

struct PointSet {
  std::vector<Vec2> points;
  std::vector<int> labels;  // same length as points, or empty

  std::size_t size() const { return points.size(); }
};

/// Directed edge: `receiver` aggregates the message sent by `sender`.
struct Edge {
  int receiver = 0;
  int sender = 0;
  bool operator==(const Edge &) const = default;
  auto operator<=>(const Edge &) const = default;
};

struct ParticleGraph {
  std::vector<Vec2> particles;
  std::vector<Edge> edges;
  int resolution = 0;
  std::vector<int> material;  // per particle, or empty

  /// Throws if an invariant (index range, self edges, in-degree <= k) fails.
  void validate(int k) const;
};

/// Piece centers inside the workspace. Throws on an empty foreground.
PointSet segment_foreground(const Observation &obs);

/// Foreground point nearest the centroid (lowest index on ties).
int fps_start_index(const std::vector<Vec2> &points);

/// Farthest point sampling of `count` indices starting at `start`.
std::vector<int> fps(const std::vector<Vec2> &points, int count, int start);

/// Mass center of all points within r_center of each sampled particle.
std::vector<Vec2> center_bias(const std::vector<Vec2> &sampled,
                              const std::vector<Vec2> &all_points, double r_center);

/// Per particle: vector to its projection on the pusher's final edge line if
/// the particle lies in the sweep rectangle, else zero.
std::vector<Vec2> sweep_displacements(const std::vector<Vec2> &particles, const Action &action);
std::vector<std::uint8_t> sweep_mask(const std::vector<Vec2> &particles, const Action &action);

std::vector<Edge> build_edges(const std::vector<Vec2> &shifted, const PerceptionParams &params);

/// Edges for particles under `action`: build_edges(particles + displacements).
std::vector<Edge> edges_under_action(const std::vector<Vec2> &particles, const Action &action,
                                     const PerceptionParams &params);

struct GraphOptions {
  bool center_bias = true;
};

ParticleGraph build_graph(const Observation &obs, const Action &action, int resolution,
                          const PerceptionParams &params, GraphOptions opts = {});

/// One-record graph serialization in the episode record style:
/// {"type":"graph","resolution":w,"particles":[...],"edges":[u,v,...],"material":[...]}
std::string graph_record_line(const ParticleGraph &g);
ParticleGraph parse_graph_record(const std::string &line);

}  // namespace dynres
