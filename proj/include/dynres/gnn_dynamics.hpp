#pragma once

// Resolution-conditioned particle-graph dynamics.
//
// Node encoder   p_i = MLP_O([pos_i, disp_i, in_sweep_i, w~, onehot(material_i)])
// Edge encoder   q_j = MLP_E([(o_r - o_s)/s, |o_r - o_s|/s, w~])
// L rounds of    r_j = MLP_Ed(q_j, h_r, h_s, w~)            (edge decoder)
//                h_i = MLP_Od(p_i, sum_{j: r_j = i} r_j, h_i) (node decoder, h^0 = p)
// Head           o_i' = o_i + out_scale * (h_i W + b)
//
// w~ = (w - w_min) / (w_max - w_min). disp_i is the sweep displacement of the
// particle under the action (zero outside the sweep). The encoders run once;
// only the decode/aggregate stage is iterated.

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "dynres/autodiff.hpp"
#include "dynres/checkpoint.hpp"
#include "dynres/perception.hpp"
#include "dynres/sim_granular.hpp"

namespace dynres {

struct GnnConfig {
  int hidden = 32;
  int steps = 3;  // message-passing rounds L
  int n_materials = 3;
  int omega_min = 10;
  int omega_max = 100;
  double pos_center = 0.25;
  double pos_scale = 0.25;
  double disp_scale = 0.1;
  double edge_scale = 0.06;
  double out_scale = 0.05;

  int node_features() const { return 6 + n_materials; }
  static constexpr int kEdgeFeatures = 4;
  double omega_tilde(int omega) const;
  void validate() const;
};

struct Mlp {
  ad::Param w1, b1, w2, b2;
};

struct GnnParams {
  GnnConfig cfg;
  Mlp node_enc;
  Mlp edge_enc;
  // edge decoder, first layer split by input block
  ad::Param edec_q, edec_recv, edec_send, edec_omega, edec_b1, edec_w2, edec_b2;
  // node decoder, first layer split by input block
  ad::Param ndec_p, ndec_agg, ndec_h, ndec_b1, ndec_w2, ndec_b2;
  ad::Param head_w, head_b;

  static GnnParams init(const GnnConfig &cfg, std::uint64_t seed);
  std::vector<ad::Param *> all();
  std::vector<const ad::Param *> all() const;
  void zero_head();

  std::vector<NamedTensor> to_tensors() const;
  static GnnParams from_tensors(const std::vector<NamedTensor> &tensors);
};

/// Weights bound to a tape, either as trainable params or as constants.
struct BoundGnn {
  const GnnParams *params = nullptr;
  ad::Var node_w1, node_b1, node_w2, node_b2;
  ad::Var edge_w1, edge_b1, edge_w2, edge_b2;
  ad::Var edec_q, edec_recv, edec_send, edec_omega, edec_b1, edec_w2, edec_b2;
  ad::Var ndec_p, ndec_agg, ndec_h, ndec_b1, ndec_w2, ndec_b2;
  ad::Var head_w, head_b;
};

BoundGnn bind(ad::Tape &tape, GnnParams &params, bool trainable);
BoundGnn bind_const(ad::Tape &tape, const GnnParams &params);

/// Action as differentiable tape leaves. With d = (cos a, sin a) the sweep
/// displacement of an in-sweep particle o is  c - o D  where
/// c = L d + (start . d) d  and  D = d d^T.
struct ActionVars {
  ad::Var c;  // 1 x 2
  ad::Var D;  // 2 x 2
};

ActionVars action_leaves(ad::Tape &tape, const Action &a);
/// Chain rule from the adjoints of (c, D) to (start.x, start.y, angle, length).
std::array<double, 4> action_param_grad(const ad::Tape &tape, const ActionVars &av, const Action &a);

/// Optional per-step diagnostics.
struct StepTrace {
  ad::Var node_latent;    // p, |O| x hidden
  ad::Var edge_latent;    // q, |E| x hidden
  ad::Var first_messages; // aggregated messages of round 1, |O| x hidden
};

/// One dynamics step on the tape. `mask` marks in-sweep particles (computed
/// by the caller from current values); `edges` fixes the topology.
ad::Var gnn_step(ad::Tape &tape, const BoundGnn &w, ad::Var positions, const ActionVars &av,
                 const std::vector<std::uint8_t> &mask, const std::vector<Edge> &edges,
                 const std::vector<int> &material, int omega, StepTrace *trace = nullptr);

ad::Matrix positions_matrix(const std::vector<Vec2> &pts);
std::vector<Vec2> matrix_positions(const ad::Matrix &m);

struct Encoded {
  ad::Matrix node_latent;
  ad::Matrix edge_latent;
};

Encoded encode(const ParticleGraph &graph, const Action &action, int omega, const GnnParams &params);
std::vector<Vec2> forward(const ParticleGraph &graph, const Action &action, int omega,
                          const GnnParams &params);
/// Aggregated first-round messages per node (pre node-decoder).
ad::Matrix first_round_messages(const ParticleGraph &graph, const Action &action, int omega,
                                const GnnParams &params);

/// Positions at steps 0..H. Step 0 uses graph0.edges; later steps rebuild
/// edges from the predicted positions under the next action.
std::vector<std::vector<Vec2>> rollout(const ParticleGraph &graph0, const std::vector<Action> &actions,
                                       int horizon, const GnnParams &params,
                                       const PerceptionParams &perception);

/// (1 / (T |O|)) sum_t sum_i |pred - truth|^2 over matching T x |O| trajectories.
double loss(const std::vector<std::vector<Vec2>> &predicted,
            const std::vector<std::vector<Vec2>> &truth);

/// Scalar objective of the final predicted positions, built on the tape.
using TapeObjective = std::function<ad::Var(ad::Tape &, ad::Var positions)>;

struct ActionGradient {
  double objective = 0.0;
  std::vector<std::array<double, 4>> grad;  // per action: d/d(start.x, start.y, angle, length)
  std::vector<Vec2> final_positions;
};

/// Objective after rolling out `horizon` actions and its gradient w.r.t. each
/// action's continuous parameters. Edge topology and sweep membership are
/// held fixed at their current values. When `grad_if` is set the backward
/// pass runs only if it returns true for the objective value.
ActionGradient action_gradient(const ParticleGraph &graph, const std::vector<Action> &actions,
                               int horizon, const GnnParams &params,
                               const PerceptionParams &perception, const TapeObjective &objective,
                               bool need_grad = true,
                               const std::function<bool(double)> &grad_if = {});

// ---- training -------------------------------------------------------------

struct TrainConfig {
  int horizon = 2;
  double lr = 1e-3;
  double lr_final = 1e-4;
  int batch_size = 4;
  int epochs = 20;
  int windows_per_epoch = 400;
  int omega_min = 10;
  int omega_max = 100;
  double val_fraction = 0.1;
  int val_windows = 60;
  double clip_norm = 10.0;
};

struct LossPoint {
  int epoch = 0;
  double train_mse = 0.0;
  double val_mse = 0.0;
};

struct TrainResult {
  GnnParams params;
  std::vector<LossPoint> curve;
  int skipped_episodes = 0;
};

/// One training window: tracked piece indices and their trajectory.
struct Window {
  std::vector<std::vector<Vec2>> positions;  // T+1 frames of the tracked pieces
  std::vector<Action> actions;               // T actions
  std::vector<int> material;
  int omega = 0;
};

/// FPS (no center bias) over all pieces at `t`, tracked through t + horizon.
Window make_window(const Episode &ep, std::size_t t, int horizon, int omega);

/// Multi-horizon loss of one window on the tape; accumulates param grads when
/// `accumulate` is set. Returns the horizon-averaged per-particle MSE.
double window_loss(GnnParams &params, const Window &w, const PerceptionParams &perception,
                   bool accumulate, double grad_scale = 1.0);

/// One-step MSE over windows; `persistence` evaluates the no-motion baseline.
double one_step_mse(const GnnParams &params, const std::vector<Window> &windows,
                    const PerceptionParams &perception, bool persistence);

TrainResult train(const std::vector<Episode> &episodes, const TrainConfig &config,
                  const GnnConfig &model, const PerceptionParams &perception, std::uint64_t seed);

std::string loss_curve_csv(const std::vector<LossPoint> &curve, const Provenance &prov);

}  // namespace dynres
