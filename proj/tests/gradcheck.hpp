#pragma once

// Finite-difference checks of the model's parameter and action gradients.
// Both rebuild the computation with topology (edges, sweep membership) held
// at the nominal values, and skip coordinates whose +-h evaluations change
// the kink pattern (relu/sqrt sides, nearest-neighbour assignments).

#include <algorithm>
#include <cmath>
#include <vector>

#include "dynres/gnn_dynamics.hpp"
#include "dynres/kernels.hpp"
#include "dynres/objective.hpp"
#include "dynres/util.hpp"

namespace gradcheck {

using namespace dynres;

struct Report {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
};

/// |a - n| / max(|a|, |n|), with pairs both below `floor` compared absolutely.
inline double rel_error(double a, double n, double floor = 1e-9) {
  const double scale = std::max({std::abs(a), std::abs(n), floor});
  return std::abs(a - n) / scale;
}

/// Steps below ~1e-5 drown the ~1e-9 parameter gradients in roundoff.
/// One-step loss (1/omega) sum |f(o) - truth|^2 against every parameter entry.
inline Report params(GnnParams model, const Window &w, const PerceptionParams &perception,
                     double h = 1e-5) {
  ad::Tape t;
  const BoundGnn bound = bind(t, model, true);
  const Action &a = w.actions.at(0);
  const auto edges = edges_under_action(w.positions[0], a, perception);
  ad::Var pos = t.constant(positions_matrix(w.positions[0]));
  pos = gnn_step(t, bound, pos, action_leaves(t, a), sweep_mask(w.positions[0], a), edges, w.material,
                 w.omega);
  const ad::Var root =
      t.scale(t.sum(t.square(t.sub(pos, t.constant(positions_matrix(w.positions[1]))))), 1.0 / w.omega);
  for (ad::Param *p : model.all()) p->zero_grad();
  t.backward(root);
  const std::uint64_t sig = t.kink_signature();
  Report r;
  for (ad::Param *p : model.all()) {
    for (std::size_t e = 0; e < p->value.size(); ++e) {
      const double v0 = p->value.data[e];
      p->value.data[e] = v0 + h;
      t.forward();
      const double fp = t.value(root).data[0];
      const bool okp = t.kink_signature() == sig;
      p->value.data[e] = v0 - h;
      t.forward();
      const double fm = t.value(root).data[0];
      const bool okm = t.kink_signature() == sig;
      p->value.data[e] = v0;
      if (!okp || !okm) {
        ++r.skipped;
        continue;
      }
      const double err = rel_error(p->grad.data[e], (fp - fm) / (2 * h));
      r.max_rel_error = std::max(r.max_rel_error, err);
      ++r.checked;
    }
  }
  return r;
}

struct Evaluation {
  double value = 0.0;
  std::uint64_t signature = 0;
};

/// Task objective after rolling `actions` with the given fixed topology.
inline Evaluation objective_fixed(const ParticleGraph &g, const std::vector<Action> &actions,
                                  const std::vector<std::vector<std::uint8_t>> &masks,
                                  const std::vector<std::vector<Edge>> &edges, const GnnParams &model,
                                  const GoalSpec &goal) {
  ad::Tape t;
  const BoundGnn w = bind_const(t, model);
  ad::Var pos = t.constant(positions_matrix(g.particles));
  for (std::size_t k = 0; k < actions.size(); ++k)
    pos = gnn_step(t, w, pos, action_leaves(t, actions[k]), masks[k], edges[k], g.material, g.resolution);
  const ad::Var obj = task_objective_tape(t, pos, goal);
  std::vector<Vec2> px;
  for (const Vec2 &m : matrix_positions(t.value(pos))) px.push_back(goal.transform.to_pixel(m));
  std::uint64_t sig = t.kink_signature();
  for (int j : kernels::nearest(px, goal.goal_points).argmin) sig = hash_key(sig, static_cast<std::uint64_t>(j));
  for (int j : kernels::nearest(goal.goal_subset, px).argmin) sig = hash_key(sig, static_cast<std::uint64_t>(j));
  return {t.value(obj).data[0], sig};
}

/// Task objective gradient w.r.t. (start.x, start.y, angle, length) of every action.
inline Report actions(const ParticleGraph &g, const std::vector<Action> &acts, const GnnParams &model,
                      const PerceptionParams &perception, const GoalSpec &goal, double h = 1e-6) {
  const int horizon = static_cast<int>(acts.size());
  const TapeObjective obj = [&](ad::Tape &t, ad::Var p) { return task_objective_tape(t, p, goal); };
  const ActionGradient ag = action_gradient(g, acts, horizon, model, perception, obj);
  // nominal topology, reproduced exactly as the planner computes it
  std::vector<std::vector<std::uint8_t>> masks;
  std::vector<std::vector<Edge>> edges;
  std::vector<Vec2> cur = g.particles;
  for (int k = 0; k < horizon; ++k) {
    masks.push_back(sweep_mask(cur, acts[k]));
    edges.push_back(k == 0 ? g.edges : edges_under_action(cur, acts[k], perception));
    ParticleGraph step = g;
    step.particles = cur;
    step.edges = edges.back();
    ad::Tape t;
    const BoundGnn w = bind_const(t, model);
    const ad::Var out = gnn_step(t, w, t.constant(positions_matrix(cur)), action_leaves(t, acts[k]),
                                 masks.back(), edges.back(), g.material, g.resolution);
    cur = matrix_positions(t.value(out));
  }
  const Evaluation nominal = objective_fixed(g, acts, masks, edges, model, goal);
  Report r;
  for (int k = 0; k < horizon; ++k)
    for (int c = 0; c < 4; ++c) {
      auto shifted = [&](double d) {
        std::vector<Action> a = acts;
        Action &x = a[static_cast<std::size_t>(k)];
        (c == 0 ? x.start.x : c == 1 ? x.start.y : c == 2 ? x.angle : x.length) += d;
        return objective_fixed(g, a, masks, edges, model, goal);
      };
      const Evaluation p = shifted(h), m = shifted(-h);
      if (p.signature != nominal.signature || m.signature != nominal.signature) {
        ++r.skipped;
        continue;
      }
      const double numeric = (p.value - m.value) / (2 * h);
      r.max_rel_error = std::max(r.max_rel_error, rel_error(ag.grad[k][c], numeric));
      ++r.checked;
    }
  return r;
}

}  // namespace gradcheck
