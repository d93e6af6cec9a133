#include "dynres/planner_mpc.hpp"

#include <cmath>
#include <stdexcept>

#include "dynres/util.hpp"

namespace dynres {

double ComputeBudget::cost(int omega) const {
  return static_cast<double>(omega) * (1.0 + edges_per_node);
}

int ComputeBudget::iterations(int omega) const {
  validate();
  if (omega < 1) throw std::invalid_argument("ComputeBudget: resolution must be >= 1");
  return std::max(1, static_cast<int>(std::floor(total / cost(omega))));
}

void ComputeBudget::validate() const {
  if (!(total > 0.0) || edges_per_node < 0) throw std::invalid_argument("ComputeBudget: invalid budget");
}

void PlannerConfig::validate() const {
  if (samples < 1 || horizon < 1) throw std::invalid_argument("PlannerConfig: samples and horizon must be >= 1");
  if (step < 0.0 || min_step < 0.0 || !(angle_scale > 0.0))
    throw std::invalid_argument("PlannerConfig: invalid step settings");
}

ParticleGraph sample_particles(const Observation &obs, int omega, const PerceptionParams &perception) {
  ParticleGraph g = build_graph(obs, Action{}, omega, perception);
  g.edges.clear();
  return g;
}

namespace {

ActionGradient evaluate(const ParticleGraph &base, const std::vector<Action> &actions,
                        const GnnParams &model, const PerceptionParams &perception,
                        const GoalSpec &goal, bool need_grad,
                        const std::function<bool(double)> &grad_if = {}) {
  ParticleGraph g = base;
  g.edges = edges_under_action(g.particles, actions.front(), perception);
  const TapeObjective obj = [&goal](ad::Tape &t, ad::Var pos) { return task_objective_tape(t, pos, goal); };
  return action_gradient(g, actions, static_cast<int>(actions.size()), model, perception, obj,
                         need_grad, grad_if);
}

struct Candidate {
  std::vector<Action> actions;
  double initial = 0.0;
  double cost = 0.0;
};

Candidate descend(const SimConfig &sim, const ParticleGraph &base, std::vector<Action> actions,
                  const GnnParams &model, const PerceptionParams &perception, const GoalSpec &goal,
                  const PlannerConfig &cfg, int iterations) {
  Candidate c;
  ActionGradient cur = evaluate(base, actions, model, perception, goal, true);
  c.initial = cur.objective;
  double step = cfg.step;
  for (int it = 0; it < iterations && step >= cfg.min_step; ++it) {
    // step direction in (x, y, angle * angle_scale, length)
    double nrm = 0.0;
    for (const auto &g : cur.grad)
      nrm += g[0] * g[0] + g[1] * g[1] + std::pow(g[2] / cfg.angle_scale, 2) + g[3] * g[3];
    nrm = std::sqrt(nrm);
    if (!(nrm > 0.0)) break;
    std::vector<Action> trial = actions;
    for (std::size_t k = 0; k < trial.size(); ++k) {
      const auto &g = cur.grad[k];
      const double s = step / nrm;
      trial[k].start.x -= s * g[0];
      trial[k].start.y -= s * g[1];
      trial[k].angle -= s * g[2] / (cfg.angle_scale * cfg.angle_scale);
      trial[k].length -= s * g[3];
      trial[k] = clamp_action(sim, trial[k]);
    }
    const double best = cur.objective;
    ActionGradient next = evaluate(base, trial, model, perception, goal, true,
                                   [best](double v) { return v < best; });
    if (next.objective < best) {
      actions = std::move(trial);
      cur = std::move(next);
    } else {
      step *= 0.5;
    }
  }
  c.actions = std::move(actions);
  c.cost = cur.objective;
  return c;
}

}  // namespace

double rollout_cost(const ParticleGraph &particles, const std::vector<Action> &actions,
                    const GnnParams &model, const PerceptionParams &perception, const GoalSpec &goal) {
  return evaluate(particles, actions, model, perception, goal, false).objective;
}

PlanResult plan_actions(const SimConfig &sim, const Observation &obs, int omega, const GoalSpec &goal,
                        const GnnParams &model, const PerceptionParams &perception,
                        const PlannerConfig &config, int iterations, std::uint64_t seed) {
  config.validate();
  if (iterations < 0) throw std::invalid_argument("plan_actions: iterations must be >= 0");
  const ParticleGraph base = sample_particles(obs, omega, perception);

  // draw every sample up front so results do not depend on thread scheduling
  PileState pieces;
  pieces.positions = segment_foreground(obs).points;
  std::vector<std::vector<Action>> init(static_cast<std::size_t>(config.samples));
  Rng rng(seed);
  for (auto &seq : init)
    for (int k = 0; k < config.horizon; ++k)
      seq.push_back(config.targeted ? sample_targeted_action(sim, pieces, rng) : sample_action(sim, rng));

  std::vector<Candidate> out(init.size());
  std::exception_ptr err;
#pragma omp parallel for schedule(dynamic, 1)
  for (int m = 0; m < config.samples; ++m) {
    try {
      out[m] = descend(sim, base, init[m], model, perception, goal, config, iterations);
    } catch (...) {
#pragma omp critical
      err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);

  PlanResult r;
  r.omega = omega;
  r.iterations = iterations;
  std::size_t best = 0;
  for (std::size_t m = 0; m < out.size(); ++m) {
    r.initial_costs.push_back(out[m].initial);
    r.final_costs.push_back(out[m].cost);
    if (out[m].cost < out[best].cost) best = m;
  }
  r.actions = out[best].actions;
  r.cost = out[best].cost;
  r.best_initial_cost = *std::min_element(r.initial_costs.begin(), r.initial_costs.end());
  return r;
}

std::vector<double> EpisodeLog::distance_curve() const {
  std::vector<double> d{initial_distance};
  for (const auto &s : steps) d.push_back(s.distance);
  return d;
}

Observation observe_for(const SimConfig &sim, const PileState &state, std::optional<int> material) {
  const Observation obs = observe(sim, state);
  return material ? restrict_material(sim, obs, *material) : obs;
}

EpisodeLog run_mpc(const SimConfig &sim, PileState &env, const GoalSpec &goal, const GnnParams &model,
                   const PerceptionParams &perception, const ResolutionPolicy &policy,
                   const MpcConfig &config, std::uint64_t seed, std::optional<int> material) {
  if (config.steps < 1) throw std::invalid_argument("run_mpc: steps must be >= 1");
  EpisodeLog log;
  Observation obs = observe_for(sim, env, material);
  log.initial_distance = distribution_distance(obs, goal);
  if (log.initial_distance < config.success_threshold) {
    log.success = true;
    return log;
  }
  for (int step = 0; step < config.steps; ++step) {
    MpcStep s;
    s.step = step;
    s.omega_requested = policy(obs, goal);
    const int fg = static_cast<int>(segment_foreground(obs).size());
    s.omega = std::clamp(s.omega_requested, 1, fg);
    const PlanResult plan =
        plan_actions(sim, obs, s.omega, goal, model, perception, config.planner,
                     config.budget.iterations(s.omega), derive_seed(seed, "mpc.plan", step));
    s.action = plan.actions.front();
    s.planned_cost = plan.cost;
    env = apply_push(sim, env, s.action);
    obs = observe_for(sim, env, material);
    s.distance = distribution_distance(obs, goal);
    log.steps.push_back(s);
    if (s.distance < config.success_threshold) {
      log.success = true;
      break;
    }
  }
  return log;
}

std::string serialize_mpc_log(const EpisodeLog &log, const Provenance &prov) {
  std::string s = "{\"type\":\"mpc_header\",\"config_hash\":\"" + prov.config_hash +
                  "\",\"master_seed\":" + std::to_string(prov.master_seed) +
                  ",\"initial_distance\":" + fmt9(log.initial_distance) +
                  ",\"success\":" + (log.success ? "true" : "false") + "}\n";
  for (const auto &st : log.steps)
    s += "{\"type\":\"mpc_step\",\"step\":" + std::to_string(st.step) +
         ",\"omega_requested\":" + std::to_string(st.omega_requested) +
         ",\"omega\":" + std::to_string(st.omega) + ",\"action\":" + action_json(st.action) +
         ",\"planned_cost\":" + fmt9(st.planned_cost) + ",\"distance\":" + fmt9(st.distance) + "}\n";
  return s;
}

}  // namespace dynres
