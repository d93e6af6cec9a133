#include "dynres/resolution_selector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "dynres/util.hpp"
#include "json.hpp"

namespace dynres {

double budgeted_cost(const SimConfig &sim, const Observation &obs, const GoalSpec &goal, int omega,
                     const GnnParams &model, const PerceptionParams &perception,
                     const PlannerConfig &planner, const ComputeBudget &budget, std::uint64_t seed) {
  return plan_actions(sim, obs, omega, goal, model, perception, planner, budget.iterations(omega), seed).cost;
}

double regularizer(int omega, double c0, double weight) { return weight * c0 * omega; }

double reference_cost(const Observation &obs, const GoalSpec &goal, int omega_ref,
                      const PerceptionParams &perception) {
  const int fg = static_cast<int>(segment_foreground(obs).size());
  const ParticleGraph g = sample_particles(obs, std::clamp(omega_ref, 1, fg), perception);
  return task_objective(g.particles, goal);
}

void BoConfig::validate() const {
  if (omega_min < 1 || omega_max < omega_min) throw std::invalid_argument("BoConfig: invalid bounds");
  if (n_init < 1 || n_iter < 0) throw std::invalid_argument("BoConfig: n_init >= 1 and n_iter >= 0 required");
}

double bo_normalize(int omega, const BoConfig &cfg) {
  if (cfg.omega_max == cfg.omega_min) return 0.0;
  return static_cast<double>(omega - cfg.omega_min) / (cfg.omega_max - cfg.omega_min);
}

std::vector<double> bo_grid_mean(const std::vector<BoSample> &samples, const BoConfig &cfg) {
  std::vector<double> x, y, grid;
  for (const auto &s : samples) {
    x.push_back(bo_normalize(s.omega, cfg));
    y.push_back(s.value);
  }
  for (int w = cfg.omega_min; w <= cfg.omega_max; ++w) grid.push_back(bo_normalize(w, cfg));
  return gp_posterior(gp_fit(x, y, cfg.kernel), grid).mean;
}

namespace {

std::size_t argmin_first(const std::vector<double> &v) {
  return static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

BoResult bo_label(const std::function<double(int)> &objective, const BoConfig &cfg) {
  cfg.validate();
  BoResult r;
  const int lo = cfg.omega_min, hi = cfg.omega_max;
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(hi - lo + 1), 0);
  auto eval = [&](int w) {
    seen[static_cast<std::size_t>(w - lo)] = 1;
    r.samples.push_back({w, objective(w)});
  };
  for (int i = 0; i < cfg.n_init; ++i) {
    const int w = cfg.n_init == 1
                      ? lo
                      : lo + static_cast<int>(std::lround(static_cast<double>(i) * (hi - lo) / (cfg.n_init - 1)));
    if (!seen[static_cast<std::size_t>(w - lo)]) eval(w);
  }
  for (int it = 0; it < cfg.n_iter; ++it) {
    if (std::all_of(seen.begin(), seen.end(), [](std::uint8_t s) { return s != 0; })) break;
    std::vector<double> x, y, grid;
    for (const auto &s : r.samples) {
      x.push_back(bo_normalize(s.omega, cfg));
      y.push_back(s.value);
    }
    for (int w = lo; w <= hi; ++w) grid.push_back(bo_normalize(w, cfg));
    const double best = *std::min_element(y.begin(), y.end());
    const auto ei = expected_improvement(gp_posterior(gp_fit(x, y, cfg.kernel), grid), best, cfg.xi);
    int pick = lo + static_cast<int>(
                        std::max_element(ei.begin(), ei.end()) - ei.begin());  // first max = smallest omega
    if (seen[static_cast<std::size_t>(pick - lo)]) {
      for (int d = 1;; ++d) {
        if (pick - d >= lo && !seen[static_cast<std::size_t>(pick - d - lo)]) { pick -= d; break; }
        if (pick + d <= hi && !seen[static_cast<std::size_t>(pick + d - lo)]) { pick += d; break; }
      }
    }
    eval(pick);
  }
  r.grid_mean = bo_grid_mean(r.samples, cfg);
  r.omega_star = lo + static_cast<int>(argmin_first(r.grid_mean));
  return r;
}

// ---- regressor --------------------------------------------------------------

namespace {

std::vector<double> pool(const std::vector<std::uint8_t> &grid, int rows, int cols) {
  std::vector<double> out(kPoolSize * kPoolSize, 0.0);
  std::vector<int> count(kPoolSize * kPoolSize, 0);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const int pr = r * kPoolSize / rows;
      const int pc = c * kPoolSize / cols;
      out[pr * kPoolSize + pc] += grid[static_cast<std::size_t>(r) * cols + c] ? 1.0 : 0.0;
      ++count[pr * kPoolSize + pc];
    }
  for (std::size_t i = 0; i < out.size(); ++i)
    if (count[i]) out[i] /= count[i];
  return out;
}

}  // namespace

std::vector<double> featurize(const Observation &obs, const GoalSpec &goal) {
  if (goal.goal_points.empty()) throw std::invalid_argument("featurize: empty goal");
  const int rows = obs.rows(), cols = obs.cols();
  if (rows < kPoolSize || cols < kPoolSize) throw std::invalid_argument("featurize: grid smaller than pool");
  std::vector<double> f = pool(obs.occupancy, rows, cols);
  const auto g = pool(goal.heatmap, goal.transform.rows, goal.transform.cols);
  f.insert(f.end(), g.begin(), g.end());
  const auto fg = obs.occupied_pixels();
  const double width = static_cast<double>(cols);
  f.push_back(static_cast<double>(fg.size()) / (static_cast<double>(rows) * cols));
  if (fg.empty()) {
    f.insert(f.end(), {0.0, 0.0, 0.0});
  } else {
    f.push_back(distribution_distance(fg, goal) / width);
    const Vec2 off = centroid(fg) - centroid(goal.goal_points);
    f.push_back(off.x / width);
    f.push_back(off.y / width);
  }
  return f;
}

void RegressorConfig::validate() const {
  if (hidden < 1 || epochs < 0 || omega_max < omega_min || omega_min < 1)
    throw std::invalid_argument("RegressorConfig: invalid settings");
  if (val_fraction < 0.0 || val_fraction >= 1.0) throw std::invalid_argument("RegressorConfig: val_fraction in [0,1)");
}

namespace {

ad::Var reg_forward(ad::Tape &t, ad::Var x, ad::Var w1, ad::Var b1, ad::Var w2, ad::Var b2) {
  return t.add_row(t.matmul(t.relu(t.add_row(t.matmul(x, w1), b1)), w2), b2);
}

ad::Matrix stack(const std::vector<const LabelRecord *> &rows) {
  ad::Matrix m(static_cast<int>(rows.size()), kFeatureSize);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i]->features.size() != static_cast<std::size_t>(kFeatureSize))
      throw std::invalid_argument("train_regressor: label without a full feature vector");
    std::copy(rows[i]->features.begin(), rows[i]->features.end(), m.data.begin() + i * kFeatureSize);
  }
  return m;
}

double normalize_label(int w, const RegressorConfig &c) {
  return c.omega_max == c.omega_min ? 0.0
                                    : static_cast<double>(w - c.omega_min) / (c.omega_max - c.omega_min);
}

}  // namespace

double ResolutionRegressor::raw(const std::vector<double> &features) const {
  if (features.size() != static_cast<std::size_t>(kFeatureSize))
    throw std::invalid_argument("regressor: feature length mismatch");
  ad::Matrix x(1, kFeatureSize);
  for (int k = 0; k < kFeatureSize; ++k) x.data[k] = features[k] - x_mean.data[k];
  ad::Tape t;
  const ad::Var y = reg_forward(t, t.constant(std::move(x)), t.constant_ref(w1.value), t.constant_ref(b1.value),
                                t.constant_ref(w2.value), t.constant_ref(b2.value));
  return t.value(y).data[0];
}

std::vector<NamedTensor> ResolutionRegressor::to_tensors() const {
  return {{"reg.meta", ad::Matrix(1, 3, {static_cast<double>(cfg.hidden), static_cast<double>(cfg.omega_min),
                                         static_cast<double>(cfg.omega_max)})},
          {"reg.x_mean", x_mean},
          {w1.name, w1.value}, {b1.name, b1.value}, {w2.name, w2.value}, {b2.name, b2.value}};
}

ResolutionRegressor ResolutionRegressor::from_tensors(const std::vector<NamedTensor> &tensors) {
  const auto &meta = find_tensor(tensors, "reg.meta");
  if (meta.size() != 3) throw std::runtime_error("regressor checkpoint: bad meta");
  ResolutionRegressor r;
  r.cfg.hidden = static_cast<int>(meta.data[0]);
  r.cfg.omega_min = static_cast<int>(meta.data[1]);
  r.cfg.omega_max = static_cast<int>(meta.data[2]);
  auto load = [&](ad::Param &p, const char *name, int rows, int cols) {
    p = ad::Param(name, rows, cols);
    const auto &v = find_tensor(tensors, name);
    if (v.rows != rows || v.cols != cols) throw std::runtime_error(std::string("regressor checkpoint: shape of ") + name);
    p.value = v;
  };
  r.x_mean = find_tensor(tensors, "reg.x_mean");
  if (r.x_mean.size() != kFeatureSize) throw std::runtime_error("regressor checkpoint: shape of reg.x_mean");
  load(r.w1, "reg.w1", kFeatureSize, r.cfg.hidden);
  load(r.b1, "reg.b1", 1, r.cfg.hidden);
  load(r.w2, "reg.w2", r.cfg.hidden, 1);
  load(r.b2, "reg.b2", 1, 1);
  return r;
}

RegressorFit train_regressor(const std::vector<LabelRecord> &labels, const RegressorConfig &cfg,
                             std::uint64_t seed) {
  cfg.validate();
  if (labels.empty()) throw std::invalid_argument("train_regressor: no labels");
  std::vector<const LabelRecord *> tr, va;
  {
    std::vector<std::size_t> order(labels.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), std::mt19937_64(derive_seed(seed, "reg.split")));
    const auto n_val = static_cast<std::size_t>(std::floor(cfg.val_fraction * labels.size()));
    for (std::size_t i = 0; i < order.size(); ++i) (i < n_val ? va : tr).push_back(&labels[order[i]]);
  }
  RegressorFit fit;
  ResolutionRegressor &m = fit.model;
  m.cfg = cfg;
  Rng rng(derive_seed(seed, "reg.init"));
  m.w1 = ad::Param("reg.w1", kFeatureSize, cfg.hidden);
  m.b1 = ad::Param("reg.b1", 1, cfg.hidden);
  m.w2 = ad::Param("reg.w2", cfg.hidden, 1);
  m.b2 = ad::Param("reg.b2", 1, 1);
  const double a1 = std::sqrt(6.0 / (kFeatureSize + cfg.hidden));
  // small head: the fit starts from the label mean instead of a random offset
  const double a2 = 0.1 * std::sqrt(6.0 / (cfg.hidden + 1));
  for (double &v : m.w1.value.data) v = rng.uniform(-a1, a1);
  for (double &v : m.w2.value.data) v = rng.uniform(-a2, a2);

  ad::Matrix xtr = stack(tr);
  const int n_tr = xtr.rows;
  // centering only: features are bounded, and dividing by small deviations inflates sparse cells
  for (int k = 0; k < kFeatureSize; ++k) {
    double mu = 0.0;
    for (int i = 0; i < n_tr; ++i) mu += xtr(i, k);
    mu /= n_tr;
    m.x_mean.data[k] = mu;
    for (int i = 0; i < n_tr; ++i) xtr(i, k) -= mu;
  }
  ad::Matrix ytr(static_cast<int>(tr.size()), 1);
  double mean = 0.0;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    ytr.data[i] = normalize_label(tr[i]->omega_star, cfg);
    mean += ytr.data[i];
  }
  m.b2.value.data[0] = mean / static_cast<double>(tr.size());

  ad::Adam opt({&m.w1, &m.b1, &m.w2, &m.b2}, {cfg.lr, 0.9, 0.999, 1e-8, 10.0});
  const double inv_n = 1.0 / static_cast<double>(tr.size());
  for (int e = 0; e < cfg.epochs; ++e) {
    ad::Tape t;
    const ad::Var pred = reg_forward(t, t.constant_ref(xtr), t.param(m.w1), t.param(m.b1), t.param(m.w2),
                                     t.param(m.b2));
    const ad::Var mse = t.scale(t.sum(t.square(t.sub(pred, t.constant_ref(ytr)))), inv_n);
    for (ad::Param *p : {&m.w1, &m.b1, &m.w2, &m.b2}) p->zero_grad();
    t.backward(mse);
    for (ad::Param *p : {&m.w1, &m.w2})
      for (std::size_t i = 0; i < p->value.size(); ++i) p->grad.data[i] += cfg.weight_decay * p->value.data[i];
    opt.step();
  }
  for (ad::Param *p : {&m.w1, &m.b1, &m.w2, &m.b2}) p->zero_grad();

  auto mse_of = [&](const std::vector<const LabelRecord *> &set) {
    double s = 0.0;
    for (const auto *r : set) {
      const double d = m.raw(r->features) - normalize_label(r->omega_star, cfg);
      s += d * d;
    }
    return set.empty() ? 0.0 : s / static_cast<double>(set.size());
  };
  fit.train_mse = mse_of(tr);
  fit.val_mse = mse_of(va);
  if (!va.empty()) {
    double mu = 0.0, v = 0.0;
    for (const auto *r : va) mu += normalize_label(r->omega_star, cfg);
    mu /= static_cast<double>(va.size());
    for (const auto *r : va) v += std::pow(normalize_label(r->omega_star, cfg) - mu, 2);
    fit.label_variance = v / static_cast<double>(va.size());
  }
  return fit;
}

int predict_resolution(const ResolutionRegressor &reg, const std::vector<double> &features, int foreground_size) {
  const auto &c = reg.cfg;
  const double w = c.omega_min + reg.raw(features) * (c.omega_max - c.omega_min);
  const double hi = std::min(c.omega_max, std::max(foreground_size, c.omega_min));
  if (!std::isfinite(w)) return c.omega_min;
  return static_cast<int>(std::clamp(std::round(w), static_cast<double>(c.omega_min), hi));
}

int predict_resolution(const ResolutionRegressor &reg, const Observation &obs, const GoalSpec &goal) {
  const int fg = static_cast<int>(segment_foreground(obs).size());
  return std::min(predict_resolution(reg, featurize(obs, goal), fg), fg);
}

// ---- label records ----------------------------------------------------------

std::string label_record_line(const LabelRecord &r) {
  std::ostringstream s;
  s << "{\"type\":\"label\",\"source\":" << nlohmann::json(r.source).dump() << ",\"step\":" << r.step
    << ",\"omega_star\":" << r.omega_star << ",\"samples\":[";
  for (std::size_t i = 0; i < r.samples.size(); ++i)
    s << (i ? "," : "") << "[" << r.samples[i].omega << "," << fmt9(r.samples[i].value) << "]";
  s << "],\"features\":[";
  for (std::size_t i = 0; i < r.features.size(); ++i) s << (i ? "," : "") << fmt9(r.features[i]);
  s << "]}";
  return s.str();
}

LabelRecord parse_label_record(const std::string &line) {
  const auto j = nlohmann::json::parse(line);
  if (j.at("type") != "label") throw std::runtime_error("label file: unexpected record type");
  LabelRecord r;
  r.source = j.at("source").get<std::string>();
  r.step = j.at("step").get<int>();
  r.omega_star = j.at("omega_star").get<int>();
  for (const auto &s : j.at("samples")) r.samples.push_back({s.at(0).get<int>(), s.at(1).get<double>()});
  r.features = j.at("features").get<std::vector<double>>();
  return r;
}

std::vector<LabelRecord> parse_label_file(const std::string &text) {
  std::vector<LabelRecord> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    if (j.value("type", "") == "label") out.push_back(parse_label_record(line));
  }
  return out;
}

}  // namespace dynres
