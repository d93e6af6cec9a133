#include "dynres/sort_planner.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <stdexcept>
#include <unordered_map>

#include "dynres/perception.hpp"

namespace dynres {

GridCell SparseGrid::snap(Vec2 px) const {
  GridCell c{static_cast<int>(std::lround((px.x - origin.x) / pitch)),
             static_cast<int>(std::lround((px.y - origin.y) / pitch))};
  c.i = std::clamp(c.i, 0, nx - 1);
  c.j = std::clamp(c.j, 0, ny - 1);
  return c;
}

SparseGrid make_sparse_grid(const PixelTransform &t, double radius_px, double pitch_factor) {
  if (!(radius_px > 0.0) || !(pitch_factor > 0.0)) throw std::invalid_argument("sparse grid: invalid radius");
  SparseGrid g;
  g.pitch = pitch_factor * radius_px;
  g.origin = {radius_px, radius_px};
  g.nx = static_cast<int>(std::floor((t.cols - 2.0 * radius_px) / g.pitch)) + 1;
  g.ny = static_cast<int>(std::floor((t.rows - 2.0 * radius_px) / g.pitch)) + 1;
  if (g.nx < 1 || g.ny < 1) throw std::invalid_argument("sparse grid: radius too large for the frame");
  return g;
}

bool BlobWorld::collision_free(const std::vector<GridCell> &c) const {
  for (std::size_t a = 0; a < c.size(); ++a) {
    if (!grid.contains(c[a])) return false;
    for (std::size_t b = a + 1; b < c.size(); ++b)
      if (norm(grid.point(c[a]) - grid.point(c[b])) < 2.0 * radius - 1e-9) return false;
  }
  return true;
}

BlobEstimate blob_extract(const Observation &obs, const SparseGrid &grid, int n_materials) {
  const PointSet fg = segment_foreground(obs);
  BlobEstimate est;
  for (int m = 0; m < n_materials; ++m) {
    Vec2 s;
    int n = 0;
    for (std::size_t i = 0; i < fg.size(); ++i)
      if (!fg.labels.empty() && fg.labels[i] == m) {
        s += obs.transform.to_pixel(fg.points[i]);
        ++n;
      }
    if (n == 0) throw std::runtime_error("blob_extract: material " + std::to_string(m) + " not present");
    const Vec2 c = s * (1.0 / n);
    est.centroids.push_back(c);
    est.centers.push_back(grid.snap(c));
  }
  return est;
}

namespace {

int grid_dist(GridCell a, GridCell b, bool eight) {
  const int dx = std::abs(a.i - b.i), dy = std::abs(a.j - b.j);
  return eight ? std::max(dx, dy) : dx + dy;
}

struct NodeKeyHash {
  std::size_t operator()(const std::vector<GridCell> &v) const {
    std::size_t h = 1469598103934665603ULL;
    for (const auto &c : v) {
      h = (h ^ static_cast<std::size_t>(c.i + 7919)) * 1099511628211ULL;
      h = (h ^ static_cast<std::size_t>(c.j + 104729)) * 1099511628211ULL;
    }
    return h;
  }
};

}  // namespace

double sort_heuristic(const std::vector<GridCell> &node, const std::vector<GridCell> &goal,
                      const AstarConfig &cfg) {
  double h = 0.0;
  for (std::size_t b = 0; b < node.size(); ++b) h += grid_dist(node[b], goal[b], cfg.eight_connected);
  return h * cfg.step_cost;
}

std::vector<std::pair<SortMove, std::vector<GridCell>>> sort_neighbors(
    const BlobWorld &world, const std::vector<GridCell> &node, const AstarConfig &cfg) {
  static constexpr int d4[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  static constexpr int d8[8][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
  const int nd = cfg.eight_connected ? 8 : 4;
  std::vector<std::pair<SortMove, std::vector<GridCell>>> out;
  for (std::size_t b = 0; b < node.size(); ++b)
    for (int k = 0; k < nd; ++k) {
      const auto &d = cfg.eight_connected ? d8[k] : d4[k];
      std::vector<GridCell> next = node;
      next[b] = {node[b].i + d[0], node[b].j + d[1]};
      if (!world.collision_free(next)) continue;
      out.push_back({{static_cast<int>(b), node[b], next[b]}, std::move(next)});
    }
  return out;
}

SortPlan astar(const BlobWorld &world, const std::vector<GridCell> &goal, const AstarConfig &cfg,
               AstarTrace *trace) {
  if (goal.size() != world.centers.size()) throw std::invalid_argument("astar: goal blob count mismatch");
  if (!world.collision_free(world.centers) || !world.collision_free(goal))
    throw std::invalid_argument("astar: start or goal not collision free");
  if (!(cfg.step_cost > 0.0)) throw std::invalid_argument("astar: step cost must be positive");

  using Key = std::vector<GridCell>;
  struct Info {
    double g;
    std::size_t parent;  // index into `keys`
    SortMove move;
    bool closed;
  };
  std::vector<Key> keys;
  std::vector<Info> info;
  std::unordered_map<Key, std::size_t, NodeKeyHash> index;
  // (f, insertion counter, node index); smallest f, then earliest insertion
  using Entry = std::tuple<double, std::uint64_t, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  std::uint64_t counter = 0;

  keys.push_back(world.centers);
  info.push_back({0.0, static_cast<std::size_t>(-1), {}, false});
  index.emplace(world.centers, 0);
  open.emplace(sort_heuristic(world.centers, goal, cfg), counter++, 0);

  SortPlan plan;
  while (!open.empty()) {
    const auto [f, ord, id] = open.top();
    open.pop();
    (void)ord;
    if (info[id].closed) continue;
    info[id].closed = true;
    ++plan.expansions;
    if (trace) trace->expanded.push_back({keys[id], info[id].g, sort_heuristic(keys[id], goal, cfg)});
    if (keys[id] == goal) {
      plan.solvable = true;
      plan.cost = info[id].g;
      for (std::size_t cur = id; cur != static_cast<std::size_t>(-1); cur = info[cur].parent) {
        plan.nodes.push_back(keys[cur]);
        if (info[cur].parent != static_cast<std::size_t>(-1)) plan.moves.push_back(info[cur].move);
      }
      std::reverse(plan.nodes.begin(), plan.nodes.end());
      std::reverse(plan.moves.begin(), plan.moves.end());
      return plan;
    }
    if (plan.expansions >= cfg.max_expansions) break;
    const Key cur = keys[id];
    const double g = info[id].g;
    for (auto &[mv, next] : sort_neighbors(world, cur, cfg)) {
      const double ng = g + cfg.step_cost;
      auto it = index.find(next);
      std::size_t nid;
      if (it == index.end()) {
        nid = keys.size();
        keys.push_back(next);
        info.push_back({ng, id, mv, false});
        index.emplace(std::move(next), nid);
      } else {
        nid = it->second;
        if (info[nid].closed || ng >= info[nid].g) continue;
        info[nid].g = ng;
        info[nid].parent = id;
        info[nid].move = mv;
      }
      open.emplace(ng + sort_heuristic(keys[nid], goal, cfg), counter++, nid);
    }
  }
  return plan;
}

bool valid_plan(const BlobWorld &world, const SortPlan &plan, const AstarConfig &cfg) {
  if (!plan.solvable) return plan.nodes.empty() && plan.moves.empty();
  if (plan.nodes.empty() || plan.nodes.front() != world.centers) return false;
  if (plan.moves.size() + 1 != plan.nodes.size()) return false;
  for (std::size_t k = 0; k < plan.nodes.size(); ++k) {
    if (!world.collision_free(plan.nodes[k])) return false;
    if (k == 0) continue;
    const auto &a = plan.nodes[k - 1], &b = plan.nodes[k];
    int changed = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a[i] != b[i]) {
        ++changed;
        if (grid_dist(a[i], b[i], cfg.eight_connected) != 1) return false;
        if (std::abs(a[i].i - b[i].i) > 1 || std::abs(a[i].j - b[i].j) > 1) return false;
        const auto &m = plan.moves[k - 1];
        if (m.blob != static_cast<int>(i) || m.from != a[i] || m.to != b[i]) return false;
      }
    if (changed != 1) return false;
  }
  return true;
}

std::vector<Subgoal> to_subgoals(const SortPlan &plan, int merge_horizon) {
  if (merge_horizon < 1) throw std::invalid_argument("to_subgoals: merge_horizon must be >= 1");
  std::vector<Subgoal> out;
  std::size_t k = 0;
  while (k < plan.moves.size()) {
    const int blob = plan.moves[k].blob;
    Subgoal s;
    s.blob = blob;
    s.centers_before = plan.nodes[k];
    int run = 0;
    while (k < plan.moves.size() && plan.moves[k].blob == blob && run < merge_horizon) {
      s.cell = plan.moves[k].to;
      ++k;
      ++run;
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::string sort_plan_ndjson(const SortPlan &plan) {
  std::string s = std::string("{\"type\":\"sort_plan\",\"solvable\":") + (plan.solvable ? "true" : "false") +
                  ",\"steps\":" + std::to_string(plan.moves.size()) + "}\n";
  for (std::size_t k = 0; k < plan.moves.size(); ++k) {
    const auto &m = plan.moves[k];
    s += "{\"type\":\"move\",\"step\":" + std::to_string(k) + ",\"blob\":" + std::to_string(m.blob) +
         ",\"from\":[" + std::to_string(m.from.i) + "," + std::to_string(m.from.j) + "],\"to\":[" +
         std::to_string(m.to.i) + "," + std::to_string(m.to.j) + "]}\n";
  }
  return s;
}

}  // namespace dynres
