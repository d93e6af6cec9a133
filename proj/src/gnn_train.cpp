#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

#include "dynres/gnn_dynamics.hpp"
#include "dynres/util.hpp"

namespace dynres {

using ad::Tape;
using ad::Var;

Window make_window(const Episode &ep, std::size_t t, int horizon, int omega) {
  if (horizon < 1) throw std::invalid_argument("make_window: horizon must be >= 1");
  if (t + static_cast<std::size_t>(horizon) >= ep.records.size())
    throw std::invalid_argument("make_window: window exceeds episode");
  const auto &first = ep.records[t].positions;
  if (omega < 1 || omega > static_cast<int>(first.size()))
    throw std::invalid_argument("make_window: resolution out of range");
  const std::vector<int> idx = fps(first, omega, fps_start_index(first));
  Window w;
  w.omega = omega;
  for (int k = 0; k <= horizon; ++k) {
    const auto &rec = ep.records[t + k];
    std::vector<Vec2> frame;
    frame.reserve(idx.size());
    for (int i : idx) frame.push_back(rec.positions.at(static_cast<std::size_t>(i)));
    w.positions.push_back(std::move(frame));
    if (k < horizon) {
      if (!rec.action) throw std::invalid_argument("make_window: missing action");
      w.actions.push_back(*rec.action);
    }
  }
  for (int i : idx)
    w.material.push_back(ep.material.empty() ? 0 : ep.material[static_cast<std::size_t>(i)]);
  return w;
}

double window_loss(GnnParams &params, const Window &w, const PerceptionParams &perception,
                   bool accumulate, double grad_scale) {
  const int horizon = static_cast<int>(w.actions.size());
  Tape t;
  const BoundGnn bound = bind(t, params, accumulate);
  Var pos = t.constant(positions_matrix(w.positions[0]));
  std::vector<Vec2> cur = w.positions[0];
  Var total;
  for (int k = 0; k < horizon; ++k) {
    const Action &a = w.actions[static_cast<std::size_t>(k)];
    const auto edges = edges_under_action(cur, a, perception);
    pos = gnn_step(t, bound, pos, action_leaves(t, a),sweep_mask(cur, a), edges, w.material, w.omega);
    cur = matrix_positions(t.value(pos));
    const Var err = t.sum(t.square(t.sub(pos, t.constant(positions_matrix(w.positions[k + 1])))));
    total = k == 0 ? err : t.add(total, err);
  }
  const double norm = 1.0 / (static_cast<double>(horizon) * w.omega);
  const Var mse = t.scale(total, norm);
  const double value = t.value(mse).data[0];
  if (accumulate) t.backward(t.scale(mse, grad_scale));
  return value;
}

double one_step_mse(const GnnParams &params, const std::vector<Window> &windows,
                    const PerceptionParams &perception, bool persistence) {
  if (windows.empty()) throw std::invalid_argument("one_step_mse: no windows");
  double s = 0.0;
  for (const Window &w : windows) {
    std::vector<Vec2> pred;
    if (persistence) {
      pred = w.positions[0];
    } else {
      ParticleGraph g;
      g.particles = w.positions[0];
      g.resolution = w.omega;
      g.material = w.material;
      g.edges = edges_under_action(g.particles, w.actions[0], perception);
      pred = forward(g, w.actions[0], w.omega, params);
    }
    s += loss({pred}, {w.positions[1]});
  }
  return s / static_cast<double>(windows.size());
}

namespace {

struct WindowSource {
  const Episode *ep;
  std::size_t n_starts;
};

std::vector<WindowSource> usable(const std::vector<const Episode *> &eps, int horizon) {
  std::vector<WindowSource> out;
  for (const Episode *e : eps) {
    std::size_t n = 0;
    for (std::size_t t = 0; t + horizon < e->records.size(); ++t) {
      bool ok = true;
      for (int k = 0; k < horizon; ++k) ok = ok && e->records[t + k].action.has_value();
      if (ok) n = t + 1;
      else break;
    }
    if (n > 0) out.push_back({e, n});
  }
  return out;
}

Window sample_window(const std::vector<WindowSource> &src, const TrainConfig &cfg, Rng &rng) {
  const auto &s = src[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(src.size()) - 1))];
  const auto t = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(s.n_starts) - 1));
  const int hi = std::min(cfg.omega_max, static_cast<int>(s.ep->n_pieces()));
  const int lo = std::min(cfg.omega_min, hi);
  return make_window(*s.ep, t, cfg.horizon, rng.uniform_int(lo, hi));
}

}  // namespace

TrainResult train(const std::vector<Episode> &episodes, const TrainConfig &config,
                  const GnnConfig &model, const PerceptionParams &perception, std::uint64_t seed) {
  if (config.horizon < 1 || config.batch_size < 1 || config.epochs < 0)
    throw std::invalid_argument("train: invalid config");
  std::vector<const Episode *> ok;
  int skipped = 0;
  for (const Episode &e : episodes) {
    if (e.records.size() < static_cast<std::size_t>(config.horizon) + 1) {
      std::cerr << "warning: skipping episode with " << e.records.size()
                << " records (need " << config.horizon + 1 << ")\n";
      ++skipped;
    } else {
      ok.push_back(&e);
    }
  }
  if (ok.empty()) throw std::runtime_error("train: no episode long enough for the horizon");

  std::size_t n_val = static_cast<std::size_t>(std::floor(config.val_fraction * ok.size()));
  if (config.val_fraction > 0.0 && n_val == 0 && ok.size() > 1) n_val = 1;
  std::vector<const Episode *> tr(ok.begin(), ok.end() - static_cast<std::ptrdiff_t>(n_val));
  std::vector<const Episode *> va(ok.end() - static_cast<std::ptrdiff_t>(n_val), ok.end());
  if (va.empty()) va = tr;
  const auto train_src = usable(tr, config.horizon);
  const auto val_src = usable(va, config.horizon);
  if (train_src.empty()) throw std::runtime_error("train: no usable training windows");

  TrainResult res;
  res.skipped_episodes = skipped;
  res.params = GnnParams::init(model, derive_seed(seed, "gnn.init"));
  Rng rng(derive_seed(seed, "gnn.windows"));
  Rng vrng(derive_seed(seed, "gnn.val"));
  std::vector<Window> val;
  for (int i = 0; i < config.val_windows && !val_src.empty(); ++i)
    val.push_back(sample_window(val_src, config, vrng));

  ad::Adam opt(res.params.all(), {config.lr, 0.9, 0.999, 1e-8, config.clip_norm});
  const double grad_scale = 1e4 / config.batch_size;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double frac = config.epochs > 1 ? static_cast<double>(epoch) / (config.epochs - 1) : 0.0;
    opt.set_lr(config.lr * std::pow(config.lr_final / config.lr, frac));
    double sum = 0.0;
    int count = 0;
    for (int b = 0; b < config.windows_per_epoch; b += config.batch_size) {
      for (ad::Param *p : res.params.all()) p->zero_grad();
      const int nb = std::min(config.batch_size, config.windows_per_epoch - b);
      for (int i = 0; i < nb; ++i) {
        sum += window_loss(res.params, sample_window(train_src, config, rng), perception, true,
                           grad_scale);
        ++count;
      }
      opt.step();
    }
    double vsum = 0.0;
    for (const Window &w : val) vsum += window_loss(res.params, w, perception, false);
    res.curve.push_back({epoch, count ? sum / count : 0.0,
                         val.empty() ? 0.0 : vsum / static_cast<double>(val.size())});
  }
  for (ad::Param *p : res.params.all()) p->zero_grad();
  return res;
}

}  // namespace dynres
