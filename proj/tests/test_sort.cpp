#include "doctest.h"

#include <deque>
#include <map>

#include "dynres/sort_planner.hpp"
#include "oracles.hpp"

using namespace dynres;

namespace {

BlobWorld world(int nx, int ny, std::vector<GridCell> centers, double r = 3.0) {
  BlobWorld w;
  w.radius = r;
  w.grid = SparseGrid{{r, r}, 2 * r, nx, ny};
  w.centers = std::move(centers);
  return w;
}

// Joint-state BFS over one-blob moves; -1 when unreachable.
int joint_bfs(const BlobWorld &w, const std::vector<GridCell> &goal) {
  std::map<std::vector<GridCell>, int> dist{{w.centers, 0}};
  std::deque<std::vector<GridCell>> open{w.centers};
  const GridCell dirs[4] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  while (!open.empty()) {
    const auto node = open.front();
    open.pop_front();
    if (node == goal) return dist[node];
    for (std::size_t b = 0; b < node.size(); ++b)
      for (const GridCell d : dirs) {
        auto next = node;
        next[b] = {next[b].i + d.i, next[b].j + d.j};
        if (!w.collision_free(next) || dist.count(next)) continue;
        dist[next] = dist[node] + 1;
        open.push_back(next);
      }
  }
  return -1;
}

}  // namespace

TEST_CASE("sparse grid geometry") {
  const PixelTransform t{{0, 0}, 0.5 / 64, 64, 64};
  const auto g = make_sparse_grid(t, 5.0);
  CHECK(g.pitch == 10.0);
  CHECK(g.origin == Vec2{5.0, 5.0});
  CHECK(g.nx == 6);
  CHECK(g.point({g.nx - 1, 0}).x + 5.0 <= 64.0);
  CHECK(g.snap({26.0, 14.0}) == GridCell{2, 1});
  CHECK(g.snap({-50.0, 500.0}) == GridCell{0, g.ny - 1});
}

TEST_CASE("adjacent grid cells are collision free, shared cells are not") {
  const auto w = world(3, 3, {});
  CHECK(w.collision_free({{0, 0}, {1, 0}}));
  CHECK_FALSE(w.collision_free({{1, 1}, {1, 1}}));
  CHECK_FALSE(w.collision_free({{3, 0}}));
}

TEST_CASE("single-blob A* matches BFS on small grids") {
  Rng rng(1);
  for (int trial = 0; trial < 40; ++trial) {
    const int nx = rng.uniform_int(1, 8), ny = rng.uniform_int(1, 8);
    const GridCell s{rng.uniform_int(0, nx - 1), rng.uniform_int(0, ny - 1)};
    const GridCell g{rng.uniform_int(0, nx - 1), rng.uniform_int(0, ny - 1)};
    const auto w = world(nx, ny, {s});
    const auto plan = astar(w, {g}, AstarConfig{});
    REQUIRE(plan.solvable);
    CHECK(static_cast<int>(plan.moves.size()) == oracle::bfs_single_blob(w.grid, s, g));
    CHECK(plan.cost == doctest::Approx(plan.moves.size()));
    CHECK(valid_plan(w, plan, AstarConfig{}));
  }
}

TEST_CASE("two-blob A* is optimal against joint BFS") {
  Rng rng(2);
  for (int trial = 0; trial < 15; ++trial) {
    const int nx = 4, ny = 3;
    std::vector<GridCell> cells;
    while (cells.size() < 4) {
      const GridCell c{rng.uniform_int(0, nx - 1), rng.uniform_int(0, ny - 1)};
      if (std::find(cells.begin(), cells.end(), c) == cells.end()) cells.push_back(c);
    }
    const auto w = world(nx, ny, {cells[0], cells[1]});
    const std::vector<GridCell> goal{cells[2], cells[3]};
    const auto plan = astar(w, goal, AstarConfig{});
    const int ref = joint_bfs(w, goal);
    CHECK(plan.solvable == (ref >= 0));
    if (plan.solvable) CHECK(static_cast<int>(plan.moves.size()) == ref);
  }
}

TEST_CASE("corridor swap is reported unsolvable") {
  const auto w = world(4, 1, {{0, 0}, {3, 0}});
  const auto plan = astar(w, {{3, 0}, {0, 0}}, AstarConfig{});
  CHECK_FALSE(plan.solvable);
  CHECK(plan.moves.empty());
  CHECK(joint_bfs(w, {{3, 0}, {0, 0}}) == -1);
}

TEST_CASE("heuristic never overestimates along the expansion trace") {
  const auto w = world(4, 4, {{0, 0}, {3, 3}});
  const std::vector<GridCell> goal{{3, 0}, {0, 3}};
  AstarTrace trace;
  const auto plan = astar(w, goal, AstarConfig{}, &trace);
  REQUIRE(plan.solvable);
  REQUIRE(!trace.expanded.empty());
  for (const auto &e : trace.expanded) {
    BlobWorld from = w;
    from.centers = e.node;
    const int remaining = joint_bfs(from, goal);
    CHECK(e.h <= remaining + 1e-12);
    CHECK(e.h == sort_heuristic(e.node, goal, AstarConfig{}));
  }
}

TEST_CASE("neighbors move one blob one step inside free space") {
  const auto w = world(3, 3, {{0, 0}, {1, 0}});
  const auto nb = sort_neighbors(w, w.centers, AstarConfig{});
  for (const auto &[move, node] : nb) {
    CHECK(w.collision_free(node));
    CHECK(std::abs(move.to.i - move.from.i) + std::abs(move.to.j - move.from.j) == 1);
  }
  CHECK(nb.size() == 3);  // blob 0: up; blob 1: right, up
}

TEST_CASE("subgoals merge same-blob runs up to the horizon") {
  SortPlan plan;
  plan.solvable = true;
  plan.nodes.push_back({{0, 0}, {5, 5}});
  auto push = [&](int blob, GridCell to) {
    auto n = plan.nodes.back();
    plan.moves.push_back({blob, n[blob], to});
    n[blob] = to;
    plan.nodes.push_back(n);
  };
  push(0, {1, 0});
  push(0, {2, 0});
  push(0, {3, 0});
  push(0, {4, 0});
  push(1, {5, 4});
  const auto sg = to_subgoals(plan, 3);
  REQUIRE(sg.size() == 3);
  CHECK(sg[0].cell == GridCell{3, 0});
  CHECK(sg[1].cell == GridCell{4, 0});
  CHECK(sg[1].centers_before[0] == GridCell{3, 0});
  CHECK(sg[2].blob == 1);
  CHECK(to_subgoals(plan, 1).size() == 5);
  CHECK(sort_plan_ndjson(plan).find("\"steps\":5") != std::string::npos);
}

TEST_CASE("blob_extract snaps per-material centroids") {
  SimConfig c;
  const PixelTransform t = grid_transform(c);
  const auto g = make_sparse_grid(t, 6.0);
  std::vector<Vec2> pts{t.to_meter({18, 6}), t.to_meter({18, 8}), t.to_meter({42, 30})};
  const auto obs = rasterize(c, pts, {0, 0, 1});
  const auto est = blob_extract(obs, g, 2);
  CHECK(est.centroids[0].x == doctest::Approx(18.0));
  CHECK(est.centroids[0].y == doctest::Approx(7.0));
  CHECK(est.centers[0] == GridCell{1, 0});
  CHECK(est.centers[1] == GridCell{3, 2});
  CHECK_THROWS(blob_extract(obs, g, 3));
}
