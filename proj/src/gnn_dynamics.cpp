#include "dynres/gnn_dynamics.hpp"

#include <cmath>
#include <stdexcept>

#include "dynres/util.hpp"

namespace dynres {

using ad::Matrix;
using ad::Tape;
using ad::Var;

double GnnConfig::omega_tilde(int omega) const {
  if (omega_max == omega_min) return 0.0;
  return static_cast<double>(omega - omega_min) / static_cast<double>(omega_max - omega_min);
}

void GnnConfig::validate() const {
  if (hidden < 1 || steps < 1 || n_materials < 1)
    throw std::invalid_argument("GnnConfig: hidden, steps, n_materials must be >= 1");
  if (omega_max < omega_min) throw std::invalid_argument("GnnConfig: omega_max < omega_min");
}

namespace {

void xavier(ad::Param &p, std::string name, int rows, int cols, int fan_in, int fan_out,
            Rng &rng, double gain = 1.0) {
  p = ad::Param(std::move(name), rows, cols);
  const double a = gain * std::sqrt(6.0 / (fan_in + fan_out));
  for (double &v : p.value.data) v = rng.uniform(-a, a);
}

void zeros(ad::Param &p, std::string name, int rows, int cols) {
  p = ad::Param(std::move(name), rows, cols);
}

Var mlp2(Tape &t, Var x, Var w1, Var b1, Var w2, Var b2) {
  const Var h = t.relu(t.add_row(t.matmul(x, w1), b1));
  return t.add_row(t.matmul(h, w2), b2);
}

}  // namespace

GnnParams GnnParams::init(const GnnConfig &cfg, std::uint64_t seed) {
  cfg.validate();
  GnnParams p;
  p.cfg = cfg;
  Rng rng(seed);
  const int h = cfg.hidden;
  const int nf = cfg.node_features();
  xavier(p.node_enc.w1, "node_enc.w1", nf, h, nf, h, rng);
  zeros(p.node_enc.b1, "node_enc.b1", 1, h);
  xavier(p.node_enc.w2, "node_enc.w2", h, h, h, h, rng);
  zeros(p.node_enc.b2, "node_enc.b2", 1, h);
  xavier(p.edge_enc.w1, "edge_enc.w1", GnnConfig::kEdgeFeatures, h, GnnConfig::kEdgeFeatures, h, rng);
  zeros(p.edge_enc.b1, "edge_enc.b1", 1, h);
  xavier(p.edge_enc.w2, "edge_enc.w2", h, h, h, h, rng);
  zeros(p.edge_enc.b2, "edge_enc.b2", 1, h);
  // first layers see 3h concatenated inputs
  xavier(p.edec_q, "edge_dec.w_q", h, h, 3 * h, h, rng);
  xavier(p.edec_recv, "edge_dec.w_recv", h, h, 3 * h, h, rng);
  xavier(p.edec_send, "edge_dec.w_send", h, h, 3 * h, h, rng);
  xavier(p.edec_omega, "edge_dec.w_omega", 1, h, 3 * h, h, rng);
  zeros(p.edec_b1, "edge_dec.b1", 1, h);
  // messages are summed over up to k edges
  xavier(p.edec_w2, "edge_dec.w2", h, h, h, h, rng, 0.5);
  zeros(p.edec_b2, "edge_dec.b2", 1, h);
  xavier(p.ndec_p, "node_dec.w_p", h, h, 3 * h, h, rng);
  xavier(p.ndec_agg, "node_dec.w_agg", h, h, 3 * h, h, rng);
  xavier(p.ndec_h, "node_dec.w_h", h, h, 3 * h, h, rng);
  zeros(p.ndec_b1, "node_dec.b1", 1, h);
  xavier(p.ndec_w2, "node_dec.w2", h, h, h, h, rng);
  zeros(p.ndec_b2, "node_dec.b2", 1, h);
  xavier(p.head_w, "head.w", h, 2, h, 2, rng, 0.1);
  zeros(p.head_b, "head.b", 1, 2);
  return p;
}

std::vector<ad::Param *> GnnParams::all() {
  return {&node_enc.w1, &node_enc.b1, &node_enc.w2, &node_enc.b2,
          &edge_enc.w1, &edge_enc.b1, &edge_enc.w2, &edge_enc.b2,
          &edec_q, &edec_recv, &edec_send, &edec_omega, &edec_b1, &edec_w2, &edec_b2,
          &ndec_p, &ndec_agg, &ndec_h, &ndec_b1, &ndec_w2, &ndec_b2,
          &head_w, &head_b};
}

std::vector<const ad::Param *> GnnParams::all() const {
  auto ps = const_cast<GnnParams *>(this)->all();
  return {ps.begin(), ps.end()};
}

void GnnParams::zero_head() {
  std::fill(head_w.value.data.begin(), head_w.value.data.end(), 0.0);
  std::fill(head_b.value.data.begin(), head_b.value.data.end(), 0.0);
}

std::vector<NamedTensor> GnnParams::to_tensors() const {
  std::vector<NamedTensor> out;
  out.push_back({"meta.config",
                 Matrix(1, 11, {static_cast<double>(cfg.hidden), static_cast<double>(cfg.steps),
                                static_cast<double>(cfg.n_materials),
                                static_cast<double>(cfg.omega_min),
                                static_cast<double>(cfg.omega_max), cfg.pos_center, cfg.pos_scale,
                                cfg.disp_scale, cfg.edge_scale, cfg.out_scale, 0.0})});
  for (const ad::Param *p : all()) out.push_back({p->name, p->value});
  return out;
}

GnnParams GnnParams::from_tensors(const std::vector<NamedTensor> &tensors) {
  const Matrix &m = find_tensor(tensors, "meta.config");
  if (m.size() < 10) throw std::runtime_error("checkpoint: bad meta.config");
  GnnConfig cfg;
  cfg.hidden = static_cast<int>(m.data[0]);
  cfg.steps = static_cast<int>(m.data[1]);
  cfg.n_materials = static_cast<int>(m.data[2]);
  cfg.omega_min = static_cast<int>(m.data[3]);
  cfg.omega_max = static_cast<int>(m.data[4]);
  cfg.pos_center = m.data[5];
  cfg.pos_scale = m.data[6];
  cfg.disp_scale = m.data[7];
  cfg.edge_scale = m.data[8];
  cfg.out_scale = m.data[9];
  GnnParams p = init(cfg, 0);
  for (ad::Param *q : p.all()) {
    const Matrix &v = find_tensor(tensors, q->name);
    if (!v.same_shape(q->value)) throw std::runtime_error("checkpoint: shape mismatch for " + q->name);
    q->value = v;
  }
  return p;
}

namespace {

template <class Leaf>
BoundGnn bind_with(GnnParams &p, Leaf leaf) {
  BoundGnn w;
  w.params = &p;
  w.node_w1 = leaf(p.node_enc.w1);
  w.node_b1 = leaf(p.node_enc.b1);
  w.node_w2 = leaf(p.node_enc.w2);
  w.node_b2 = leaf(p.node_enc.b2);
  w.edge_w1 = leaf(p.edge_enc.w1);
  w.edge_b1 = leaf(p.edge_enc.b1);
  w.edge_w2 = leaf(p.edge_enc.w2);
  w.edge_b2 = leaf(p.edge_enc.b2);
  w.edec_q = leaf(p.edec_q);
  w.edec_recv = leaf(p.edec_recv);
  w.edec_send = leaf(p.edec_send);
  w.edec_omega = leaf(p.edec_omega);
  w.edec_b1 = leaf(p.edec_b1);
  w.edec_w2 = leaf(p.edec_w2);
  w.edec_b2 = leaf(p.edec_b2);
  w.ndec_p = leaf(p.ndec_p);
  w.ndec_agg = leaf(p.ndec_agg);
  w.ndec_h = leaf(p.ndec_h);
  w.ndec_b1 = leaf(p.ndec_b1);
  w.ndec_w2 = leaf(p.ndec_w2);
  w.ndec_b2 = leaf(p.ndec_b2);
  w.head_w = leaf(p.head_w);
  w.head_b = leaf(p.head_b);
  return w;
}

}  // namespace

BoundGnn bind(Tape &tape, GnnParams &params, bool trainable) {
  if (!trainable) return bind_const(tape, params);
  return bind_with(params, [&](ad::Param &p) { return tape.param(p); });
}

BoundGnn bind_const(Tape &tape, const GnnParams &params) {
  auto &p = const_cast<GnnParams &>(params);
  return bind_with(p, [&](ad::Param &q) { return tape.constant_ref(q.value); });
}

ActionVars action_leaves(Tape &tape, const Action &a) {
  const Vec2 d = a.direction();
  const double sd = dot(a.start, d);
  ActionVars av;
  av.c = tape.input(Matrix(1, 2, {a.length * d.x + sd * d.x, a.length * d.y + sd * d.y}));
  av.D = tape.input(Matrix(2, 2, {d.x * d.x, d.x * d.y, d.y * d.x, d.y * d.y}));
  return av;
}

std::array<double, 4> action_param_grad(const Tape &tape, const ActionVars &av, const Action &a) {
  const Matrix &gc = tape.grad(av.c);
  const Matrix &gD = tape.grad(av.D);
  const Vec2 d = a.direction();
  const Vec2 n = a.normal();
  const Vec2 g{gc.data[0], gc.data[1]};
  const double gd = dot(g, d);
  // dc/dangle = L n + (s.n) d + (s.d) n ; dD/dangle = n d^T + d n^T
  const Vec2 dc_da = n * a.length + d * dot(a.start, n) + n * dot(a.start, d);
  double g_angle = dot(g, dc_da);
  const double nv[2] = {n.x, n.y};
  const double dv[2] = {d.x, d.y};
  for (int j = 0; j < 2; ++j)
    for (int k = 0; k < 2; ++k) g_angle += gD.data[j * 2 + k] * (nv[j] * dv[k] + dv[j] * nv[k]);
  return {gd * d.x, gd * d.y, g_angle, gd};
}

Matrix positions_matrix(const std::vector<Vec2> &pts) {
  Matrix m(static_cast<int>(pts.size()), 2);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    m.data[2 * i] = pts[i].x;
    m.data[2 * i + 1] = pts[i].y;
  }
  return m;
}

std::vector<Vec2> matrix_positions(const Matrix &m) {
  std::vector<Vec2> out(static_cast<std::size_t>(m.rows));
  for (int i = 0; i < m.rows; ++i) out[i] = {m(i, 0), m(i, 1)};
  return out;
}

Var gnn_step(Tape &t, const BoundGnn &w, Var positions, const ActionVars &av,
             const std::vector<std::uint8_t> &mask, const std::vector<Edge> &edges,
             const std::vector<int> &material, int omega, StepTrace *trace) {
  const GnnConfig &cfg = w.params->cfg;
  const int n = t.value(positions).rows;
  if (n != omega) throw std::invalid_argument("gnn_step: resolution does not match particle count");
  if (static_cast<int>(mask.size()) != n) throw std::invalid_argument("gnn_step: mask length");
  const double wt = cfg.omega_tilde(omega);

  // node features
  const Var posn = t.scale(t.add_row(positions, t.constant(Matrix(1, 2, -cfg.pos_center))),
                           1.0 / cfg.pos_scale);
  Matrix mask2(n, 2);
  for (int i = 0; i < n; ++i) mask2(i, 0) = mask2(i, 1) = mask[i] ? 1.0 : 0.0;
  const Var disp = t.mul(t.add_row(t.scale(t.matmul(positions, av.D), -1.0), av.c),
                         t.constant(std::move(mask2)));
  const Var dispn = t.scale(disp, 1.0 / cfg.disp_scale);
  Matrix extra(n, 2 + cfg.n_materials);
  for (int i = 0; i < n; ++i) {
    extra(i, 0) = mask[i] ? 1.0 : 0.0;
    extra(i, 1) = wt;
    const int m = material.empty() ? 0 : material[static_cast<std::size_t>(i)];
    if (m >= 0 && m < cfg.n_materials) extra(i, 2 + m) = 1.0;
  }
  const Var x = t.concat_cols(t.concat_cols(posn, dispn), t.constant(std::move(extra)));
  const Var p = mlp2(t, x, w.node_w1, w.node_b1, w.node_w2, w.node_b2);

  // edge features
  std::vector<int> recv, send;
  recv.reserve(edges.size());
  send.reserve(edges.size());
  for (const Edge &e : edges) {
    recv.push_back(e.receiver);
    send.push_back(e.sender);
  }
  const auto ri = ad::make_index(std::move(recv));
  const auto si = ad::make_index(std::move(send));
  const int ne = static_cast<int>(edges.size());
  const Var diff = t.scale(t.sub(t.gather_rows(positions, ri), t.gather_rows(positions, si)),
                           1.0 / cfg.edge_scale);
  const Var dist = t.sqrt(t.row_sum(t.square(diff)));
  const Var ein = t.concat_cols(t.concat_cols(diff, dist), t.constant(Matrix(ne, 1, wt)));
  const Var q = mlp2(t, ein, w.edge_w1, w.edge_b1, w.edge_w2, w.edge_b2);

  // message passing
  const Var edge_bias = t.add(w.edec_b1, t.scale(w.edec_omega, wt));
  const Var q_proj = t.add_row(t.matmul(q, w.edec_q), edge_bias);
  const Var p_proj = t.add_row(t.matmul(p, w.ndec_p), w.ndec_b1);
  Var h = p;
  for (int l = 0; l < cfg.steps; ++l) {
    const Var pre = t.add(t.add(q_proj, t.gather_rows(t.matmul(h, w.edec_recv), ri)),
                          t.gather_rows(t.matmul(h, w.edec_send), si));
    const Var msg = t.add_row(t.matmul(t.relu(pre), w.edec_w2), w.edec_b2);
    const Var agg = t.scatter_add_rows(msg, ri, n);
    if (l == 0 && trace) trace->first_messages = agg;
    const Var hid = t.relu(t.add(t.add(p_proj, t.matmul(agg, w.ndec_agg)), t.matmul(h, w.ndec_h)));
    h = t.add_row(t.matmul(hid, w.ndec_w2), w.ndec_b2);
  }
  const Var delta = t.add_row(t.matmul(h, w.head_w), w.head_b);
  if (trace) {
    trace->node_latent = p;
    trace->edge_latent = q;
  }
  return t.add(positions, t.scale(delta, cfg.out_scale));
}

namespace {

struct SingleStep {
  Tape tape;
  Var out;
  StepTrace trace;
};

void run_single(SingleStep &s, const ParticleGraph &g, const Action &a, int omega, const GnnParams &params) {
  if (omega != g.resolution || static_cast<int>(g.particles.size()) != omega)
    throw std::invalid_argument("gnn: resolution mismatch");
  const BoundGnn w = bind_const(s.tape, params);
  const Var pos = s.tape.constant(positions_matrix(g.particles));
  const ActionVars av = action_leaves(s.tape, a);
  s.out = gnn_step(s.tape, w, pos, av, sweep_mask(g.particles, a), g.edges, g.material, omega, &s.trace);
}

}  // namespace

Encoded encode(const ParticleGraph &graph, const Action &action, int omega, const GnnParams &params) {
  SingleStep s;
  run_single(s, graph, action, omega, params);
  return {s.tape.value(s.trace.node_latent), s.tape.value(s.trace.edge_latent)};
}

std::vector<Vec2> forward(const ParticleGraph &graph, const Action &action, int omega,
                          const GnnParams &params) {
  SingleStep s;
  run_single(s, graph, action, omega, params);
  return matrix_positions(s.tape.value(s.out));
}

Matrix first_round_messages(const ParticleGraph &graph, const Action &action, int omega,
                            const GnnParams &params) {
  SingleStep s;
  run_single(s, graph, action, omega, params);
  return s.tape.value(s.trace.first_messages);
}

std::vector<std::vector<Vec2>> rollout(const ParticleGraph &graph0, const std::vector<Action> &actions,
                                       int horizon, const GnnParams &params,
                                       const PerceptionParams &perception) {
  if (horizon < 0 || static_cast<int>(actions.size()) < horizon)
    throw std::invalid_argument("rollout: fewer actions than horizon");
  std::vector<std::vector<Vec2>> traj{graph0.particles};
  ParticleGraph g = graph0;
  for (int k = 0; k < horizon; ++k) {
    if (k > 0) g.edges = edges_under_action(g.particles, actions[k], perception);
    g.particles = forward(g, actions[k], g.resolution, params);
    traj.push_back(g.particles);
  }
  return traj;
}

double loss(const std::vector<std::vector<Vec2>> &predicted,
            const std::vector<std::vector<Vec2>> &truth) {
  if (predicted.size() != truth.size() || predicted.empty())
    throw std::invalid_argument("loss: horizon mismatch");
  const std::size_t n = predicted.front().size();
  double s = 0.0;
  for (std::size_t t = 0; t < predicted.size(); ++t) {
    if (predicted[t].size() != n || truth[t].size() != n)
      throw std::invalid_argument("loss: particle count mismatch");
    for (std::size_t i = 0; i < n; ++i) s += norm2(predicted[t][i] - truth[t][i]);
  }
  return s / static_cast<double>(predicted.size() * n);
}

ActionGradient action_gradient(const ParticleGraph &graph, const std::vector<Action> &actions,
                               int horizon, const GnnParams &params,
                               const PerceptionParams &perception, const TapeObjective &objective,
                               bool need_grad, const std::function<bool(double)> &grad_if) {
  if (horizon < 1 || static_cast<int>(actions.size()) < horizon)
    throw std::invalid_argument("action_gradient: fewer actions than horizon");
  Tape t;
  const BoundGnn w = bind_const(t, params);
  Var pos = t.constant(positions_matrix(graph.particles));
  std::vector<ActionVars> avs;
  std::vector<Vec2> cur = graph.particles;
  for (int k = 0; k < horizon; ++k) {
    const auto edges = k == 0 ? graph.edges : edges_under_action(cur, actions[k], perception);
    avs.push_back(action_leaves(t, actions[k]));
    pos = gnn_step(t, w, pos, avs.back(), sweep_mask(cur, actions[k]), edges, graph.material,
                   graph.resolution);
    cur = matrix_positions(t.value(pos));
  }
  const Var obj = objective(t, pos);
  ActionGradient out;
  out.objective = t.value(obj).data.at(0);
  out.final_positions = std::move(cur);
  if (need_grad && (!grad_if || grad_if(out.objective))) {
    t.backward(obj);
    for (int k = 0; k < horizon; ++k) out.grad.push_back(action_param_grad(t, avs[k], actions[k]));
  }
  return out;
}

std::string loss_curve_csv(const std::vector<LossPoint> &curve, const Provenance &prov) {
  std::string s = "# config_hash=" + prov.config_hash + " master_seed=" +
                  std::to_string(prov.master_seed) + "\nepoch,train_mse,val_mse\n";
  for (const auto &p : curve)
    s += std::to_string(p.epoch) + "," + fmt9(p.train_mse) + "," + fmt9(p.val_mse) + "\n";
  return s;
}

}  // namespace dynres
