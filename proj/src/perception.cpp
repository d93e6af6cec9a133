#include "dynres/perception.hpp"

#include <limits>
#include <stdexcept>

#include "dynres/kernels.hpp"
#include "dynres/util.hpp"
#include "json.hpp"

namespace dynres {

void PerceptionParams::validate() const {
  if (!(r_center > 0.0) || !(r_edge > 0.0) || k < 1)
    throw std::invalid_argument("PerceptionParams: r_center, r_edge > 0 and k >= 1 required");
}

void ParticleGraph::validate(int k) const {
  if (particles.empty() || static_cast<int>(particles.size()) != resolution)
    throw std::logic_error("ParticleGraph: particle count != resolution");
  if (!material.empty() && material.size() != particles.size())
    throw std::logic_error("ParticleGraph: material length mismatch");
  std::vector<int> indeg(particles.size(), 0);
  for (const Edge &e : edges) {
    if (e.receiver < 0 || e.sender < 0 || e.receiver >= resolution || e.sender >= resolution)
      throw std::logic_error("ParticleGraph: edge index out of range");
    if (e.receiver == e.sender) throw std::logic_error("ParticleGraph: self edge");
    if (++indeg[e.receiver] > k) throw std::logic_error("ParticleGraph: in-degree exceeds k");
  }
}

PointSet segment_foreground(const Observation &obs) {
  PointSet out;
  const Rect ws{obs.transform.origin,
                obs.transform.to_meter({static_cast<double>(obs.cols()),
                                        static_cast<double>(obs.rows())})};
  for (std::size_t i = 0; i < obs.points.size(); ++i) {
    if (!ws.contains(obs.points[i], obs.piece_radius)) continue;
    out.points.push_back(obs.points[i]);
    out.labels.push_back(i < obs.labels.size() ? obs.labels[i] : 0);
  }
  if (out.points.empty()) throw std::runtime_error("segment_foreground: empty foreground");
  return out;
}

int fps_start_index(const std::vector<Vec2> &points) {
  if (points.empty()) throw std::invalid_argument("fps_start_index: no points");
  const Vec2 c = centroid(points);
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double d = norm2(points[i] - c);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

std::vector<int> fps(const std::vector<Vec2> &points, int count, int start) {
  return kernels::farthest_point_sampling(points, count, start);
}

std::vector<Vec2> center_bias(const std::vector<Vec2> &sampled,
                              const std::vector<Vec2> &all_points, double r_center) {
  std::vector<Vec2> out(sampled.size());
  const double r2 = r_center * r_center;
  const long n = static_cast<long>(sampled.size());
#pragma omp parallel for schedule(static) if (n * static_cast<long>(all_points.size()) > 32768)
  for (long i = 0; i < n; ++i) {
    Vec2 sum;
    int cnt = 0;
    for (const Vec2 &y : all_points)
      if (norm2(y - sampled[i]) <= r2) {
        sum += y;
        ++cnt;
      }
    // a sampled particle that is not itself in all_points keeps its position
    out[i] = cnt > 0 ? sum * (1.0 / cnt) : sampled[i];
  }
  return out;
}

std::vector<Vec2> sweep_displacements(const std::vector<Vec2> &particles, const Action &action) {
  std::vector<Vec2> out(particles.size());
  const Vec2 dir = action.direction();
  for (std::size_t i = 0; i < particles.size(); ++i) {
    if (!in_sweep(action, particles[i])) continue;
    out[i] = dir * (action.length - sweep_coords(action, particles[i]).along);
  }
  return out;
}

std::vector<std::uint8_t> sweep_mask(const std::vector<Vec2> &particles, const Action &action) {
  std::vector<std::uint8_t> out(particles.size());
  for (std::size_t i = 0; i < particles.size(); ++i) out[i] = in_sweep(action, particles[i]) ? 1 : 0;
  return out;
}

std::vector<Edge> build_edges(const std::vector<Vec2> &shifted, const PerceptionParams &params) {
  const auto raw = kernels::radius_knn_edges(shifted, params.r_edge, params.k);
  std::vector<Edge> edges;
  edges.reserve(raw.size());
  for (const auto &[i, j] : raw) edges.push_back({i, j});
  return edges;
}

std::vector<Edge> edges_under_action(const std::vector<Vec2> &particles, const Action &action,
                                     const PerceptionParams &params) {
  const auto disp = sweep_displacements(particles, action);
  std::vector<Vec2> shifted(particles.size());
  for (std::size_t i = 0; i < particles.size(); ++i) shifted[i] = particles[i] + disp[i];
  return build_edges(shifted, params);
}

ParticleGraph build_graph(const Observation &obs, const Action &action, int resolution,
                          const PerceptionParams &params, GraphOptions opts) {
  params.validate();
  const PointSet fg = segment_foreground(obs);
  if (resolution < 1 || resolution > static_cast<int>(fg.size()))
    throw std::invalid_argument("build_graph: resolution exceeds foreground size");
  const auto idx = fps(fg.points, resolution, fps_start_index(fg.points));
  ParticleGraph g;
  g.resolution = resolution;
  g.particles.reserve(idx.size());
  for (int i : idx) {
    g.particles.push_back(fg.points[i]);
    g.material.push_back(fg.labels[i]);
  }
  if (opts.center_bias) g.particles = center_bias(g.particles, fg.points, params.r_center);
  g.edges = edges_under_action(g.particles, action, params);
  return g;
}

std::string graph_record_line(const ParticleGraph &g) {
  std::string s = "{\"type\":\"graph\",\"resolution\":" + std::to_string(g.resolution) +
                  ",\"particles\":[";
  for (std::size_t i = 0; i < g.particles.size(); ++i) {
    if (i) s += ',';
    s += fmt9(g.particles[i].x) + "," + fmt9(g.particles[i].y);
  }
  s += "],\"edges\":[";
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(g.edges[i].receiver) + "," + std::to_string(g.edges[i].sender);
  }
  s += "],\"material\":[";
  for (std::size_t i = 0; i < g.material.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(g.material[i]);
  }
  s += "]}";
  return s;
}

ParticleGraph parse_graph_record(const std::string &line) {
  const auto j = nlohmann::json::parse(line);
  if (j.at("type") != "graph") throw std::runtime_error("not a graph record");
  ParticleGraph g;
  g.resolution = j.at("resolution").get<int>();
  const auto p = j.at("particles").get<std::vector<double>>();
  for (std::size_t i = 0; i + 1 < p.size(); i += 2) g.particles.push_back({p[i], p[i + 1]});
  const auto e = j.at("edges").get<std::vector<int>>();
  for (std::size_t i = 0; i + 1 < e.size(); i += 2) g.edges.push_back({e[i], e[i + 1]});
  g.material = j.at("material").get<std::vector<int>>();
  return g;
}

}  // namespace dynres
