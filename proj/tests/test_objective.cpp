#include "doctest.h"

#include "dynres/objective.hpp"
#include "oracles.hpp"

using namespace dynres;

namespace {

PixelTransform small_grid() { return PixelTransform{{0.0, 0.0}, 0.5 / 64, 64, 64}; }

std::vector<Vec2> random_meters(Rng &rng, int n) {
  std::vector<Vec2> p(static_cast<std::size_t>(n));
  for (auto &q : p) q = {rng.uniform(0.05, 0.45), rng.uniform(0.05, 0.45)};
  return p;
}

}  // namespace

TEST_CASE("goal construction keeps cells within the disk and subsets by FPS") {
  const auto t = small_grid();
  const auto h = disk_heatmap(t, {0.25, 0.25}, 0.03);
  const auto g = make_goal(h, t, 10);
  for (const Vec2 &q : g.goal_points) CHECK(norm(t.to_meter(q) - Vec2{0.25, 0.25}) <= 0.03 + 1e-12);
  CHECK(g.goal_subset.size() == 10);
  CHECK(make_goal(h, t, 100000).goal_subset.size() == g.size());
  CHECK_THROWS(make_goal(std::vector<std::uint8_t>(64 * 64, 0), t, 5));
}

TEST_CASE("3-4-5 example: one particle, one goal cell") {
  const auto t = small_grid();
  std::vector<std::uint8_t> h(64 * 64, 0);
  h[10 * 64 + 10] = 1;  // center (10.5, 10.5) px
  const auto g = make_goal(h, t, 1);
  const Vec2 p = t.to_meter({13.5, 14.5});
  CHECK(task_objective({p}, g) == doctest::Approx(10.0));
  CHECK(distribution_distance(std::vector<Vec2>{{13.5, 14.5}}, g) == doctest::Approx(5.0));
  CHECK(distribution_distance(std::vector<Vec2>{{13.5, 14.5}}, g, false) == doctest::Approx(10.0));
}

TEST_CASE("objectives match the double-loop oracles") {
  Rng rng(17);
  const auto t = small_grid();
  for (int inst = 0; inst < 20; ++inst) {
    const auto g = make_goal(disk_heatmap(t, {rng.uniform(0.1, 0.4), rng.uniform(0.1, 0.4)},
                                          rng.uniform(0.02, 0.08)),
                             t, rng.uniform_int(5, 60));
    const auto parts = random_meters(rng, rng.uniform_int(1, 80));
    CHECK(task_objective(parts, g) == doctest::Approx(oracle::task_objective(parts, g)).epsilon(1e-12));
    std::vector<Vec2> px;
    for (const Vec2 &m : parts) px.push_back(t.to_pixel(m));
    CHECK(distribution_distance(px, g) ==
          doctest::Approx(oracle::distribution_distance(px, g.goal_points)).epsilon(1e-12));
  }
}

TEST_CASE("objectives vanish exactly on coinciding configurations") {
  const auto t = small_grid();
  const auto g = make_goal(disk_heatmap(t, {0.2, 0.3}, 0.04), t, 1000);
  std::vector<Vec2> meters;
  for (const Vec2 &q : g.goal_points) meters.push_back(t.to_meter(q));
  CHECK(task_objective(meters, g) == 0.0);
  CHECK(distribution_distance(g.goal_points, g) == 0.0);
  auto moved = g.goal_points;
  moved[3].x += 0.5;
  CHECK(distribution_distance(moved, g) > 0.0);
  meters[3].x += 1e-4;
  CHECK(task_objective(meters, g) > 0.0);
}

TEST_CASE("distribution distance is translation invariant") {
  const auto t = small_grid();
  const auto g1 = make_goal(disk_heatmap(t, {0.2, 0.2}, 0.04), t, 50);
  const auto g2 = make_goal(disk_heatmap(t, {0.2 + 5 * t.cell_size, 0.2 + 2 * t.cell_size}, 0.04), t, 50);
  Rng rng(3);
  std::vector<Vec2> f1, f2;
  for (int i = 0; i < 30; ++i) {
    const Vec2 p{rng.uniform(10, 40), rng.uniform(10, 40)};
    f1.push_back(p);
    f2.push_back(p + Vec2{5, 2});
  }
  CHECK(distribution_distance(f1, g1) == doctest::Approx(distribution_distance(f2, g2)).epsilon(1e-12));
}

TEST_CASE("observation overload uses occupied cell centers") {
  SimConfig c;
  const auto obs = rasterize(c, {{0.2, 0.2}, {0.3, 0.25}}, {0, 0});
  const auto g = make_goal(disk_heatmap(obs.transform, {0.25, 0.25}, 0.05), obs.transform, 20);
  CHECK(distribution_distance(obs, g) == distribution_distance(obs.occupied_pixels(), g));
}

TEST_CASE("tape objective equals the plain objective") {
  const auto t = small_grid();
  const auto g = make_goal(disk_heatmap(t, {0.25, 0.25}, 0.05), t, 30);
  Rng rng(8);
  const auto parts = random_meters(rng, 25);
  ad::Tape tape;
  ad::Matrix m(25, 2);
  for (int i = 0; i < 25; ++i) {
    m(i, 0) = parts[i].x;
    m(i, 1) = parts[i].y;
  }
  const auto v = task_objective_tape(tape, tape.input(m), g);
  CHECK(tape.value(v).data[0] == doctest::Approx(task_objective(parts, g)).epsilon(1e-12));
}

TEST_CASE("task_score counts strictly-below distances") {
  CHECK(task_score({1.0, 2.0, 3.0, 2.0}, 2.0) == 0.25);
  CHECK(task_score({0.5}, 1.0) == 1.0);
  CHECK_THROWS(task_score({}, 1.0));
}
