#include "dynres/config.hpp"

#include <set>
#include <stdexcept>

#include "dynres/util.hpp"
#include "json.hpp"

namespace dynres {

using ojson = nlohmann::ordered_json;

namespace {

std::string layout_name(Layout l) {
  switch (l) {
    case Layout::Uniform: return "uniform";
    case Layout::Blob: return "blob";
    case Layout::MultiBlob: return "multiblob";
  }
  return "uniform";
}

Layout parse_layout(const std::string &s) {
  if (s == "uniform") return Layout::Uniform;
  if (s == "blob") return Layout::Blob;
  if (s == "multiblob") return Layout::MultiBlob;
  throw std::invalid_argument("config: unknown layout '" + s + "'");
}

// Reads fields from a JSON object, remembering which keys were consumed.
class Reader {
 public:
  explicit Reader(const nlohmann::json &j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw std::invalid_argument("config: '" + path_ + "' must be an object");
  }

  template <class T>
  void field(const char *key, T &v) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      if constexpr (std::is_same_v<T, Layout>) {
        v = parse_layout(j_.at(key).get<std::string>());
      } else if constexpr (std::is_same_v<T, Vec2>) {
        const auto a = j_.at(key).get<std::vector<double>>();
        if (a.size() != 2) throw std::invalid_argument("expected [x, y]");
        v = {a[0], a[1]};
      } else if constexpr (std::is_same_v<T, Rect>) {
        const auto a = j_.at(key).get<std::vector<double>>();
        if (a.size() != 4) throw std::invalid_argument("expected [x0, y0, x1, y1]");
        v = {{a[0], a[1]}, {a[2], a[3]}};
      } else if constexpr (std::is_same_v<T, std::vector<Vec2>>) {
        v.clear();
        for (const auto &p : j_.at(key)) v.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
      } else if constexpr (std::is_same_v<T, std::vector<MaterialDynamics>>) {
        v.clear();
        for (const auto &p : j_.at(key)) v.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
      } else {
        if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
          if (!j_.at(key).is_number_integer()) throw std::invalid_argument("expected an integer");
        }
        v = j_.at(key).get<T>();
      }
    } catch (const std::exception &e) {
      throw std::invalid_argument("config: bad value for '" + path_ + "." + key + "': " + e.what());
    }
  }

  template <class F>
  void section(const char *key, F &&body) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    Reader sub(j_.at(key), path_.empty() ? key : path_ + "." + key);
    body(sub);
    sub.finish();
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key()))
        throw std::invalid_argument("config: unknown key '" + (path_.empty() ? "" : path_ + ".") + it.key() + "'");
  }

 private:
  const nlohmann::json &j_;
  std::string path_;
  std::set<std::string> seen_;
};

class Writer {
 public:
  explicit Writer(ojson &j) : j_(j) {}

  template <class T>
  void field(const char *key, const T &v) {
    if constexpr (std::is_same_v<T, Layout>) {
      j_[key] = layout_name(v);
    } else if constexpr (std::is_same_v<T, Vec2>) {
      j_[key] = {v.x, v.y};
    } else if constexpr (std::is_same_v<T, Rect>) {
      j_[key] = {v.lo.x, v.lo.y, v.hi.x, v.hi.y};
    } else if constexpr (std::is_same_v<T, std::vector<Vec2>>) {
      j_[key] = ojson::array();
      for (const auto &p : v) j_[key].push_back({p.x, p.y});
    } else if constexpr (std::is_same_v<T, std::vector<MaterialDynamics>>) {
      j_[key] = ojson::array();
      for (const auto &p : v) j_[key].push_back({p.spread, p.carry});
    } else {
      j_[key] = v;
    }
  }

  template <class F>
  void section(const char *key, F &&body) {
    ojson sub = ojson::object();
    Writer w(sub);
    body(w);
    j_[key] = std::move(sub);
  }

 private:
  ojson &j_;
};

// Single field list shared by parsing and dumping.
template <class V, class C>
void visit(V &v, C &c) {
  v.field("seed", c.seed);
  v.section("sim", [&](auto &s) {
    s.field("n_pieces", c.sim.n_pieces);
    s.field("piece_radius", c.sim.piece_radius);
    s.field("repulsion_radius", c.sim.repulsion_radius);
    s.field("spread_sigma", c.sim.spread_sigma);
    s.field("max_push_carry", c.sim.max_push_carry);
    s.field("workspace", c.sim.workspace);
    s.field("grid_rows", c.sim.grid_rows);
    s.field("grid_cols", c.sim.grid_cols);
    s.field("action_len_min", c.sim.action.len_min);
    s.field("action_len_max", c.sim.action.len_max);
    s.field("pusher_width", c.sim.action.pusher_width);
    s.field("layout", c.sim.layout);
    s.field("n_blobs", c.sim.n_blobs);
    s.field("blob_radius", c.sim.blob_radius);
    s.field("blob_margin", c.sim.blob_margin);
    s.field("blob_centers", c.sim.blob_centers);
    s.field("uniform_margin", c.sim.uniform_margin);
    s.field("n_materials", c.sim.n_materials);
    s.field("material_per_blob", c.sim.material_per_blob);
    s.field("materials", c.sim.materials);
    s.field("relax_max_iters", c.sim.relax_max_iters);
    s.field("relax_tol", c.sim.relax_tol);
  });
  v.section("data", [&](auto &s) {
    s.field("n_episodes", c.data.n_episodes);
    s.field("steps", c.data.steps);
    s.field("n_materials", c.data.n_materials);
    s.field("targeted_fraction", c.data.targeted_fraction);
  });
  v.section("perception", [&](auto &s) {
    s.field("r_center", c.perception.r_center);
    s.field("r_edge", c.perception.r_edge);
    s.field("k", c.perception.k);
  });
  v.section("model", [&](auto &s) {
    s.field("hidden", c.model.hidden);
    s.field("steps", c.model.steps);
    s.field("n_materials", c.model.n_materials);
    s.field("omega_min", c.model.omega_min);
    s.field("omega_max", c.model.omega_max);
  });
  v.section("train", [&](auto &s) {
    s.field("horizon", c.train.horizon);
    s.field("lr", c.train.lr);
    s.field("lr_final", c.train.lr_final);
    s.field("batch_size", c.train.batch_size);
    s.field("epochs", c.train.epochs);
    s.field("windows_per_epoch", c.train.windows_per_epoch);
    s.field("omega_min", c.train.omega_min);
    s.field("omega_max", c.train.omega_max);
    s.field("val_fraction", c.train.val_fraction);
    s.field("val_windows", c.train.val_windows);
    s.field("clip_norm", c.train.clip_norm);
  });
  v.section("planner", [&](auto &s) {
    s.field("samples", c.planner.samples);
    s.field("horizon", c.planner.horizon);
    s.field("step", c.planner.step);
    s.field("min_step", c.planner.min_step);
    s.field("angle_scale", c.planner.angle_scale);
    s.field("targeted", c.planner.targeted);
    s.field("budget", c.budget.total);
    s.field("edges_per_node", c.budget.edges_per_node);
  });
  v.section("label", [&](auto &s) {
    s.field("n_tasks", c.label.n_tasks);
    s.field("states_per_task", c.label.states_per_task);
    s.field("steps_between", c.label.steps_between);
    s.field("drive_omega", c.label.drive_omega);
    s.field("regularizer_weight", c.label.regularizer_weight);
    s.field("omega_ref", c.label.omega_ref);
    s.field("omega_min", c.label.bo.omega_min);
    s.field("omega_max", c.label.bo.omega_max);
    s.field("n_init", c.label.bo.n_init);
    s.field("n_iter", c.label.bo.n_iter);
    s.field("xi", c.label.bo.xi);
    s.field("kernel_signal_sd", c.label.bo.kernel.signal_sd);
    s.field("kernel_lengthscale", c.label.bo.kernel.lengthscale);
    s.field("kernel_noise_sd", c.label.bo.kernel.noise_sd);
  });
  v.section("regressor", [&](auto &s) {
    s.field("hidden", c.regressor.hidden);
    s.field("epochs", c.regressor.epochs);
    s.field("lr", c.regressor.lr);
    s.field("weight_decay", c.regressor.weight_decay);
    s.field("val_fraction", c.regressor.val_fraction);
    s.field("omega_min", c.regressor.omega_min);
    s.field("omega_max", c.regressor.omega_max);
  });
  v.section("task", [&](auto &s) {
    s.field("gather_layout", c.task.gather_layout);
    s.field("gather_spread_margin", c.task.gather_spread_margin);
    s.field("goal_radius", c.task.goal_radius);
    s.field("goal_margin", c.task.goal_margin);
    s.field("letter_size", c.task.letter_size);
    s.field("letter_stroke", c.task.letter_stroke);
    s.field("redistribute_pile_radius", c.task.redistribute_pile_radius);
    s.field("sort_blob_radius", c.task.sort_blob_radius);
    s.field("sort_goal_radius", c.task.sort_goal_radius);
    s.field("sort_pieces_per_material", c.task.sort_pieces_per_material);
    s.field("goal_subset", c.task.goal_subset);
  });
  v.section("eval", [&](auto &s) {
    s.field("n_tasks", c.eval.n_tasks);
    s.field("mpc_steps", c.eval.mpc_steps);
    s.field("fixed_omegas", c.eval.fixed_omegas);
    s.field("modes", c.eval.modes);
    s.field("success_threshold", c.eval.success_threshold);
    s.field("tau_min", c.eval.tau_min);
    s.field("tau_max", c.eval.tau_max);
    s.field("tau_count", c.eval.tau_count);
    s.field("task_seed", c.eval.task_seed);
  });
  v.section("sort", [&](auto &s) {
    s.field("merge_horizon", c.sort.merge_horizon);
    s.field("subgoal_threshold", c.sort.subgoal_threshold);
    s.field("max_steps_per_subgoal", c.sort.max_steps_per_subgoal);
    s.field("final_steps", c.sort.final_steps);
    s.field("task_threshold", c.sort.task_threshold);
    s.field("eight_connected", c.sort.astar.eight_connected);
    s.field("step_cost", c.sort.astar.step_cost);
  });
}

}  // namespace

RunConfig default_config() { return RunConfig{}; }

void RunConfig::validate() const {
  sim.validate();
  perception.validate();
  model.validate();
  planner.validate();
  budget.validate();
  label.bo.validate();
  regressor.validate();
  if (data.n_episodes < 0 || data.steps < 1) throw std::invalid_argument("config: data.n_episodes >= 0, data.steps >= 1");
  if (data.n_materials < 1 || data.n_materials > model.n_materials)
    throw std::invalid_argument("config: data.n_materials must be in [1, model.n_materials]");
  if (eval.n_tasks < 0 || eval.mpc_steps < 1 || eval.tau_count < 1 || eval.tau_max < eval.tau_min)
    throw std::invalid_argument("config: invalid eval settings");
  if (label.n_tasks < 0 || label.states_per_task < 1 || label.steps_between < 0 || label.drive_omega < 1)
    throw std::invalid_argument("config: invalid label settings");
  for (int w : eval.fixed_omegas)
    if (w < 1) throw std::invalid_argument("config: fixed resolutions must be >= 1");
}

MpcConfig RunConfig::mpc() const {
  MpcConfig m;
  m.steps = eval.mpc_steps;
  m.planner = planner;
  m.budget = budget;
  if (eval.success_threshold > 0.0) m.success_threshold = eval.success_threshold;
  return m;
}

RunConfig parse_config(const std::string &text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error &e) {
    throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
  }
  RunConfig c = default_config();
  Reader r(j, "");
  visit(r, c);
  r.finish();
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path &path) {
  if (!std::filesystem::exists(path)) throw std::invalid_argument("config: file not found: " + path.string());
  return parse_config(read_text_file(path));
}

std::string dump_config(const RunConfig &cfg) {
  ojson j = ojson::object();
  Writer w(j);
  visit(w, cfg);
  return j.dump(2);
}

std::string config_hash(const RunConfig &cfg) { return hex64(fnv1a(dump_config(cfg))); }

Provenance provenance(const RunConfig &cfg) { return {config_hash(cfg), cfg.seed}; }

}  // namespace dynres
