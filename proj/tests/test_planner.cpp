#include "doctest.h"

#include "dynres/planner_mpc.hpp"

using namespace dynres;

namespace {

struct Fixture {
  SimConfig sim;
  PileState state;
  Observation obs;
  GoalSpec goal;
  GnnParams model;
  PerceptionParams perc;

  Fixture() {
    sim.n_pieces = 60;
    state = init_scene(sim, 4);
    obs = observe(sim, state);
    goal = make_goal(disk_heatmap(obs.transform, {0.3, 0.2}, 0.05), obs.transform, 40);
    model = GnnParams::init(GnnConfig{}, 2);
  }
};

PlannerConfig small_planner() {
  PlannerConfig p;
  p.samples = 4;
  return p;
}

}  // namespace

TEST_CASE("compute budget arithmetic") {
  ComputeBudget b;
  CHECK(b.cost(10) == 90.0);
  CHECK(b.iterations(10) == 111);
  CHECK(b.iterations(100) == 11);
  b.total = 5.0;
  CHECK(b.iterations(100) == 1);
}

TEST_CASE("zero iterations return the best initial sample unchanged") {
  Fixture f;
  const auto r = plan_actions(f.sim, f.obs, 20, f.goal, f.model, f.perc, small_planner(), 0, 9);
  CHECK(r.cost == r.best_initial_cost);
  CHECK(r.initial_costs == r.final_costs);
  const auto base = sample_particles(f.obs, 20, f.perc);
  CHECK(rollout_cost(base, r.actions, f.model, f.perc, f.goal) == doctest::Approx(r.cost).epsilon(1e-12));
}

TEST_CASE("descent never returns a worse cost than a sample's start") {
  Fixture f;
  const auto r = plan_actions(f.sim, f.obs, 20, f.goal, f.model, f.perc, small_planner(), 15, 9);
  for (std::size_t m = 0; m < r.final_costs.size(); ++m) CHECK(r.final_costs[m] <= r.initial_costs[m]);
  CHECK(r.cost <= r.best_initial_cost);
  for (const Action &a : r.actions) {
    CHECK(a.length >= f.sim.action.len_min);
    CHECK(a.length <= f.sim.action.len_max);
    CHECK(f.sim.workspace.contains(a.start));
  }
}

TEST_CASE("an identity model makes every action equally good") {
  Fixture f;
  f.model.zero_head();
  const auto r = plan_actions(f.sim, f.obs, 20, f.goal, f.model, f.perc, small_planner(), 10, 3);
  const auto base = sample_particles(f.obs, 20, f.perc);
  const double still = task_objective(base.particles, f.goal);
  for (double c : r.final_costs) CHECK(c == doctest::Approx(still).epsilon(1e-12));
  CHECK(r.initial_costs == r.final_costs);
}

TEST_CASE("planning is reproducible for a fixed seed") {
  Fixture f;
  const auto a = plan_actions(f.sim, f.obs, 15, f.goal, f.model, f.perc, small_planner(), 5, 21);
  const auto b = plan_actions(f.sim, f.obs, 15, f.goal, f.model, f.perc, small_planner(), 5, 21);
  CHECK(a.actions == b.actions);
  CHECK(a.final_costs == b.final_costs);
  const auto c = plan_actions(f.sim, f.obs, 15, f.goal, f.model, f.perc, small_planner(), 5, 22);
  CHECK(c.initial_costs != a.initial_costs);
}

TEST_CASE("sample_particles draws the requested resolution without edges") {
  Fixture f;
  const auto g = sample_particles(f.obs, 17, f.perc);
  CHECK(g.particles.size() == 17);
  CHECK(g.edges.empty());
  CHECK(g.resolution == 17);
}

TEST_CASE("run_mpc logs every step and clamps the resolution") {
  Fixture f;
  MpcConfig cfg;
  cfg.steps = 3;
  cfg.planner = small_planner();
  cfg.budget.total = 200;
  PileState env = f.state;
  const auto log = run_mpc(f.sim, env, f.goal, f.model, f.perc,
                           [](const Observation &, const GoalSpec &) { return 500; }, cfg, 7);
  REQUIRE(log.steps.size() == 3);
  CHECK(log.steps[0].omega_requested == 500);
  CHECK(log.steps[0].omega == 60);
  CHECK(log.initial_distance == doctest::Approx(distribution_distance(f.obs, f.goal)));
  CHECK(log.final_distance() == doctest::Approx(distribution_distance(observe(f.sim, env), f.goal)));
  CHECK(log.distance_curve().size() == 4);
  CHECK(env.step == 3);

  PileState env2 = f.state;
  const auto again = run_mpc(f.sim, env2, f.goal, f.model, f.perc,
                             [](const Observation &, const GoalSpec &) { return 500; }, cfg, 7);
  CHECK(serialize_mpc_log(log, {"x", 1}) == serialize_mpc_log(again, {"x", 1}));
}

TEST_CASE("run_mpc stops early below the success threshold") {
  Fixture f;
  MpcConfig cfg;
  cfg.steps = 5;
  cfg.success_threshold = 1e9;
  PileState env = f.state;
  const auto log = run_mpc(f.sim, env, f.goal, f.model, f.perc,
                           [](const Observation &, const GoalSpec &) { return 10; }, cfg, 1);
  CHECK(log.success);
  CHECK(log.steps.empty());
}

TEST_CASE("material-restricted observation only sees that material") {
  Fixture f;
  f.sim.n_materials = 2;
  const auto st = init_scene(f.sim, 5);
  const auto obs = observe_for(f.sim, st, 1);
  for (int l : obs.labels) CHECK(l == 1);
}
