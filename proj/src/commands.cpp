#include "dynres/commands.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "dynres/util.hpp"
#include "json.hpp"

namespace dynres {

namespace fs = std::filesystem;

namespace {

void say(std::ostream *log, const std::string &msg) {
  if (log) *log << msg << std::endl;
}

/// Creates `dir` for writing; refuses a non-empty existing directory unless forced.
void prepare_output(const fs::path &dir, bool force) {
  if (fs::exists(dir) && !fs::is_directory(dir))
    throw std::runtime_error("output path is not a directory: " + dir.string());
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    if (!force) throw std::runtime_error("refusing to overwrite existing output " + dir.string() + " (use --force)");
    fs::remove_all(dir);
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  const fs::path probe = dir / ".write_probe";
  std::ofstream f(probe);
  if (ec || !f) throw std::runtime_error("output directory is not writable: " + dir.string());
  f.close();
  fs::remove(probe);
}

std::string csv_header(const Provenance &prov) {
  return "# config_hash=" + prov.config_hash + " master_seed=" + std::to_string(prov.master_seed) + "\n";
}

std::string pad4(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d", i);
  return buf;
}

void write_config_copy(const RunConfig &cfg, const fs::path &dir) {
  write_text_file(dir / "config.json", dump_config(cfg) + "\n");
}

}  // namespace

// ---- data -------------------------------------------------------------------

Episode generate_episode(const RunConfig &cfg, int index) {
  const std::uint64_t seed = derive_seed(cfg.seed, "episode", static_cast<std::uint64_t>(index));
  Rng rng(derive_seed(seed, "setup"));
  SimConfig sim = cfg.sim;
  const int layout = rng.uniform_int(0, 2);
  sim.layout = layout == 0 ? Layout::Uniform : layout == 1 ? Layout::Blob : Layout::MultiBlob;
  sim.n_materials = rng.uniform_int(1, cfg.data.n_materials);
  sim.n_blobs = sim.layout == Layout::MultiBlob ? rng.uniform_int(2, 4) : 1;
  sim.blob_radius = rng.uniform(0.04, 0.09);
  sim.blob_centers.clear();
  PileState st = init_scene(sim, seed);

  Episode ep;
  ep.piece_radius = sim.piece_radius;
  ep.workspace = sim.workspace;
  ep.seed = seed;
  ep.provenance = provenance(cfg);
  ep.material = st.material;
  Rng act(derive_seed(seed, "actions"));
  for (int t = 0; t <= cfg.data.steps; ++t) {
    EpisodeRecord rec;
    rec.step = t;
    rec.positions = st.positions;
    if (t < cfg.data.steps) {
      const bool targeted = act.uniform() < cfg.data.targeted_fraction;
      const Action a = targeted ? sample_targeted_action(sim, st, act) : sample_action(sim, act);
      rec.action = a;
      st = apply_push(sim, st, a);
    }
    ep.records.push_back(std::move(rec));
  }
  return ep;
}

void cmd_gen_data(const RunConfig &cfg, const fs::path &out, const CommandOptions &opts) {
  cfg.validate();
  const fs::path dir = out / "data";
  prepare_output(dir, opts.force);
  const Provenance prov = provenance(cfg);
  nlohmann::ordered_json manifest;
  manifest["config_hash"] = prov.config_hash;
  manifest["master_seed"] = prov.master_seed;
  manifest["n_episodes"] = cfg.data.n_episodes;
  manifest["files"] = nlohmann::ordered_json::array();
  for (int i = 0; i < cfg.data.n_episodes; ++i) {
    const std::string name = "episode_" + pad4(i) + ".ndjson";
    write_episode(dir / name, generate_episode(cfg, i));
    manifest["files"].push_back(name);
    if ((i + 1) % 50 == 0) say(opts.log, "gen-data: " + std::to_string(i + 1) + " episodes");
  }
  write_config_copy(cfg, dir);
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

std::vector<Episode> load_dataset(const fs::path &data_dir) {
  const fs::path mpath = data_dir / "manifest.json";
  if (!fs::exists(mpath)) throw std::runtime_error("missing dataset manifest: " + mpath.string());
  const auto manifest = nlohmann::json::parse(read_text_file(mpath));
  std::vector<Episode> eps;
  for (const auto &f : manifest.at("files")) {
    const fs::path p = data_dir / f.get<std::string>();
    if (!fs::exists(p)) throw std::runtime_error("missing episode file: " + p.string());
    eps.push_back(read_episode(p));
  }
  return eps;
}

// ---- dynamics ---------------------------------------------------------------

void cmd_train(const RunConfig &cfg, const fs::path &out, const CommandOptions &opts) {
  cfg.validate();
  const auto episodes = load_dataset(out / "data");
  const fs::path dir = out / "model";
  prepare_output(dir, opts.force);
  const Provenance prov = provenance(cfg);
  say(opts.log, "train: " + std::to_string(episodes.size()) + " episodes");
  const TrainResult res = train(episodes, cfg.train, cfg.model, cfg.perception, derive_seed(cfg.seed, "train"));
  save_checkpoint(dir / "gnn.ckpt", res.params.to_tensors(), prov);
  write_text_file(dir / "loss_curve.csv", loss_curve_csv(res.curve, prov));

  // held-out one-step error per resolution against the no-motion baseline
  const std::size_t n_val = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(cfg.train.val_fraction * episodes.size())));
  std::string gen = csv_header(prov) + "omega,model_mse,persistence_mse,ratio\n";
  for (int w : {20, 50, 100}) {
    Rng rng(derive_seed(cfg.seed, "generalization", static_cast<std::uint64_t>(w)));
    std::vector<Window> ws;
    for (std::size_t e = episodes.size() - std::min(n_val, episodes.size()); e < episodes.size(); ++e) {
      const Episode &ep = episodes[e];
      if (ep.records.size() < 2 || static_cast<int>(ep.n_pieces()) < w) continue;
      for (std::size_t t = 0; t + 1 < ep.records.size(); ++t)
        if (ep.records[t].action) ws.push_back(make_window(ep, t, 1, w));
    }
    if (ws.empty()) continue;
    const double m = one_step_mse(res.params, ws, cfg.perception, false);
    const double b = one_step_mse(res.params, ws, cfg.perception, true);
    gen += std::to_string(w) + "," + fmt9(m) + "," + fmt9(b) + "," + fmt9(m / b) + "\n";
  }
  write_text_file(dir / "generalization.csv", gen);
  write_config_copy(cfg, dir);
}

GnnParams load_model(const fs::path &out) {
  return GnnParams::from_tensors(load_checkpoint(out / "model" / "gnn.ckpt"));
}

// ---- labels -----------------------------------------------------------------

BoResult label_state(const RunConfig &cfg, const Observation &obs, const GoalSpec &goal, const GnnParams &model,
                     std::uint64_t seed) {
  const double c0 = reference_cost(obs, goal, cfg.label.omega_ref, cfg.perception);
  const int fg = static_cast<int>(segment_foreground(obs).size());
  BoConfig bo = cfg.label.bo;
  bo.omega_max = std::min(bo.omega_max, fg);
  bo.omega_min = std::min(bo.omega_min, bo.omega_max);
  return bo_label(
      [&](int w) {
        return budgeted_cost(cfg.sim, obs, goal, w, model, cfg.perception, cfg.planner, cfg.budget, seed) +
               regularizer(w, c0, cfg.label.regularizer_weight);
      },
      bo);
}

std::vector<LabelRecord> generate_labels(const RunConfig &cfg, const GnnParams &model, std::ostream *log) {
  std::vector<LabelRecord> labels;
  const std::uint64_t task_seed = derive_seed(cfg.seed, "label.tasks");
  for (int i = 0; i < cfg.label.n_tasks; ++i) {
    const TaskInstance task = make_task(TaskKind::Gather, cfg.sim, cfg.task, task_seed, i);
    PileState env = task.start;
    for (int s = 0; s < cfg.label.states_per_task; ++s) {
      const Observation obs = observe(task.sim, env);
      const std::uint64_t seed = derive_seed(cfg.seed, "label.plan", static_cast<std::uint64_t>(i * 1000 + s));
      const BoResult bo = label_state(cfg, obs, task.goal, model, seed);
      LabelRecord rec;
      rec.source = task.id;
      rec.step = s * cfg.label.steps_between;
      rec.omega_star = bo.omega_star;
      rec.samples = bo.samples;
      rec.features = featurize(obs, task.goal);
      labels.push_back(std::move(rec));
      say(log, "label: " + task.id + " step " + std::to_string(labels.back().step) + " -> omega " +
                   std::to_string(bo.omega_star));
      if (s + 1 < cfg.label.states_per_task && cfg.label.steps_between > 0) {
        MpcConfig mc = cfg.mpc();
        mc.steps = cfg.label.steps_between;
        mc.success_threshold = -std::numeric_limits<double>::infinity();
        const int w = cfg.label.drive_omega;
        run_mpc(task.sim, env, task.goal, model, cfg.perception,
                [w](const Observation &, const GoalSpec &) { return w; }, mc,
                derive_seed(cfg.seed, "label.drive", static_cast<std::uint64_t>(i * 1000 + s)));
      }
    }
  }
  return labels;
}

void cmd_label(const RunConfig &cfg, const fs::path &out, const CommandOptions &opts) {
  cfg.validate();
  const GnnParams model = load_model(out);
  const fs::path dir = out / "labels";
  prepare_output(dir, opts.force);
  const Provenance prov = provenance(cfg);
  const auto labels = generate_labels(cfg, model, opts.log);
  std::string text = "{\"type\":\"label_header\",\"config_hash\":\"" + prov.config_hash +
                     "\",\"master_seed\":" + std::to_string(prov.master_seed) +
                     ",\"count\":" + std::to_string(labels.size()) + "}\n";
  for (const auto &l : labels) text += label_record_line(l) + "\n";
  write_text_file(dir / "labels.ndjson", text);
  write_config_copy(cfg, dir);
}

// ---- regressor --------------------------------------------------------------

void cmd_train_regressor(const RunConfig &cfg, const fs::path &out, const CommandOptions &opts) {
  cfg.validate();
  const fs::path lpath = out / "labels" / "labels.ndjson";
  if (!fs::exists(lpath)) throw std::runtime_error("missing labels: " + lpath.string());
  const auto labels = parse_label_file(read_text_file(lpath));
  const fs::path dir = out / "regressor";
  prepare_output(dir, opts.force);
  const Provenance prov = provenance(cfg);
  const RegressorFit fit = train_regressor(labels, cfg.regressor, derive_seed(cfg.seed, "regressor"));
  save_checkpoint(dir / "regressor.ckpt", fit.model.to_tensors(), prov);
  write_text_file(dir / "report.csv", csv_header(prov) + "n_labels,train_mse,val_mse,val_label_variance\n" +
                                          std::to_string(labels.size()) + "," + fmt9(fit.train_mse) + "," +
                                          fmt9(fit.val_mse) + "," + fmt9(fit.label_variance) + "\n");
  write_config_copy(cfg, dir);
  say(opts.log, "train-regressor: val mse " + fmt9(fit.val_mse) + " (label variance " + fmt9(fit.label_variance) + ")");
}

ResolutionRegressor load_regressor(const fs::path &out) {
  return ResolutionRegressor::from_tensors(load_checkpoint(out / "regressor" / "regressor.ckpt"));
}

// ---- evaluation -------------------------------------------------------------

std::vector<const MethodRun *> SuiteResult::runs_of(const std::string &method) const {
  std::vector<const MethodRun *> out;
  for (const auto &r : runs)
    if (r.method == method) out.push_back(&r);
  return out;
}

std::vector<std::string> expand_modes(const RunConfig &cfg, const std::vector<std::string> &modes) {
  std::vector<std::string> out;
  for (const auto &m : modes) {
    if (m == "dynamic" || m == "oracle") {
      out.push_back(m);
    } else if (m == "fixed") {
      for (int w : cfg.eval.fixed_omegas) out.push_back("fixed-" + std::to_string(w));
    } else if (m.rfind("fixed:", 0) == 0) {
      int w = 0;
      try {
        std::size_t used = 0;
        w = std::stoi(m.substr(6), &used);
        if (used != m.size() - 6) throw std::invalid_argument("trailing characters");
      } catch (const std::exception &) {
        throw std::invalid_argument("invalid mode: " + m);
      }
      if (w < 1) throw std::invalid_argument("invalid mode: " + m);
      out.push_back("fixed-" + std::to_string(w));
    } else {
      throw std::invalid_argument("invalid mode: " + m);
    }
  }
  return out;
}

namespace {

ResolutionPolicy policy_for(const RunConfig &cfg, const std::string &method, const GnnParams &model,
                            const ResolutionRegressor *reg, std::uint64_t seed) {
  if (method == "dynamic") {
    if (!reg) throw std::runtime_error("dynamic mode needs a trained regressor");
    return [reg](const Observation &obs, const GoalSpec &goal) { return predict_resolution(*reg, obs, goal); };
  }
  if (method == "oracle") {
    auto counter = std::make_shared<std::uint64_t>(0);
    return [&cfg, &model, seed, counter](const Observation &obs, const GoalSpec &goal) {
      return label_state(cfg, obs, goal, model, derive_seed(seed, "oracle", (*counter)++)).omega_star;
    };
  }
  const int w = std::stoi(method.substr(6));
  return [w](const Observation &, const GoalSpec &) { return w; };
}

}  // namespace

SuiteResult run_suite(const RunConfig &cfg, TaskKind kind, const std::vector<std::string> &methods,
                      const GnnParams &model, const ResolutionRegressor *regressor, std::ostream *log) {
  SuiteResult res;
  res.kind = kind;
  res.methods = methods;
  const MpcConfig mc = cfg.mpc();
  for (int i = 0; i < cfg.eval.n_tasks; ++i) {
    const TaskInstance task = make_task(kind, cfg.sim, cfg.task, cfg.eval.task_seed, i);
    for (const auto &method : methods) {
      // identical planning seeds across methods keep the comparison paired
      const std::uint64_t seed = derive_seed(cfg.eval.task_seed, "eval.mpc", static_cast<std::uint64_t>(i));
      const ResolutionPolicy policy = policy_for(cfg, method, model, regressor, seed);
      if (kind == TaskKind::Sort) {
        SortExecConfig exec = cfg.sort;
        exec.mpc = mc;
        res.sorts.push_back({task.id, method, run_sort_task(task, cfg.task, model, cfg.perception, policy, exec, seed)});
        const auto &o = res.sorts.back().outcome;
        say(log, "eval: " + task.id + " " + method + " final " + fmt9(o.final_distances.at(0)) + " / " +
                     fmt9(o.final_distances.at(1)));
      } else {
        PileState env = task.start;
        res.runs.push_back({task.id, method, run_mpc(task.sim, env, task.goal, model, cfg.perception, policy, mc, seed)});
        const auto &l = res.runs.back().log;
        say(log, "eval: " + task.id + " " + method + " " + fmt9(l.initial_distance) + " -> " + fmt9(l.final_distance()));
      }
    }
  }
  return res;
}

double curve_area(const EpisodeLog &log) {
  const auto c = log.distance_curve();
  double s = 0.0;
  for (double d : c) s += d;
  return s / static_cast<double>(c.size());
}

std::vector<double> tau_grid(const EvalConfig &cfg) {
  std::vector<double> t;
  for (int i = 0; i < cfg.tau_count; ++i)
    t.push_back(cfg.tau_count == 1 ? cfg.tau_min
                                   : cfg.tau_min + (cfg.tau_max - cfg.tau_min) * i / (cfg.tau_count - 1));
  return t;
}

std::string steps_csv(const SuiteResult &r, const Provenance &prov) {
  std::string s = csv_header(prov) + "task,method,step,distance,omega,omega_requested\n";
  for (const auto &run : r.runs) {
    s += run.task_id + "," + run.method + ",0," + fmt9(run.log.initial_distance) + ",,\n";
    for (const auto &st : run.log.steps)
      s += run.task_id + "," + run.method + "," + std::to_string(st.step + 1) + "," + fmt9(st.distance) + "," +
           std::to_string(st.omega) + "," + std::to_string(st.omega_requested) + "\n";
  }
  for (const auto &run : r.sorts)
    for (std::size_t m = 0; m < run.outcome.final_distances.size(); ++m)
      s += run.task_id + "," + run.method + ",material" + std::to_string(m) + "," +
           fmt9(run.outcome.final_distances[m]) + ",,\n";
  return s;
}

std::string tau_csv(const SuiteResult &r, const EvalConfig &cfg, const Provenance &prov) {
  std::string s = csv_header(prov) + "tau,method,score\n";
  for (double tau : tau_grid(cfg))
    for (const auto &m : r.methods) {
      std::vector<double> finals;
      for (const auto *run : r.runs_of(m)) finals.push_back(run->log.final_distance());
      for (const auto &sr : r.sorts)
        if (sr.method == m)
          finals.push_back(*std::max_element(sr.outcome.final_distances.begin(), sr.outcome.final_distances.end()));
      if (finals.empty()) continue;
      s += fmt9(tau) + "," + m + "," + fmt9(task_score(finals, tau)) + "\n";
    }
  return s;
}

std::string summary_csv(const SuiteResult &r, const Provenance &prov) {
  std::string s = csv_header(prov) + "method,n_tasks,mean_area,mean_final,halved\n";
  for (const auto &m : r.methods) {
    const auto runs = r.runs_of(m);
    if (runs.empty()) {
      int n = 0, ok = 0;
      for (const auto &sr : r.sorts)
        if (sr.method == m) {
          ++n;
          ok += sr.outcome.success ? 1 : 0;
        }
      if (n) s += m + "," + std::to_string(n) + ",,," + std::to_string(ok) + "\n";
      continue;
    }
    double area = 0.0, fin = 0.0;
    int halved = 0;
    for (const auto *run : runs) {
      area += curve_area(run->log);
      fin += run->log.final_distance();
      halved += run->log.final_distance() <= 0.5 * run->log.initial_distance ? 1 : 0;
    }
    const double n = static_cast<double>(runs.size());
    s += m + "," + std::to_string(runs.size()) + "," + fmt9(area / n) + "," + fmt9(fin / n) + "," +
         std::to_string(halved) + "\n";
  }
  return s;
}

void cmd_eval(const RunConfig &cfg, const fs::path &out, const CommandOptions &opts) {
  cfg.validate();
  const auto methods = expand_modes(cfg, opts.modes.empty() ? cfg.eval.modes : opts.modes);
  const bool need_reg = std::find(methods.begin(), methods.end(), "dynamic") != methods.end();
  const GnnParams model = load_model(out);
  std::optional<ResolutionRegressor> reg;
  if (need_reg) reg = load_regressor(out);
  const fs::path dir = out / "eval";
  prepare_output(dir, opts.force);
  const Provenance prov = provenance(cfg);
  for (TaskKind kind : opts.tasks) {
    const SuiteResult r = run_suite(cfg, kind, methods, model, reg ? &*reg : nullptr, opts.log);
    const std::string name = task_kind_name(kind);
    write_text_file(dir / (name + "_steps.csv"), steps_csv(r, prov));
    write_text_file(dir / (name + "_tau.csv"), tau_csv(r, cfg.eval, prov));
    write_text_file(dir / (name + "_summary.csv"), summary_csv(r, prov));
    if (kind == TaskKind::Sort)
      for (const auto &sr : r.sorts)
        write_text_file(dir / (sr.task_id + "-" + sr.method + "_plan.ndjson"), sort_plan_ndjson(sr.outcome.plan));
  }
  write_config_copy(cfg, dir);
}

void cmd_rollout(const RunConfig &cfg, const fs::path &out, const CommandOptions &opts) {
  cfg.validate();
  const auto methods = expand_modes(cfg, opts.modes.empty() ? std::vector<std::string>{"fixed:50"} : opts.modes);
  const bool need_reg = std::find(methods.begin(), methods.end(), "dynamic") != methods.end();
  const GnnParams model = load_model(out);
  std::optional<ResolutionRegressor> reg;
  if (need_reg) reg = load_regressor(out);
  const fs::path dir = out / "rollout";
  prepare_output(dir, opts.force);
  const Provenance prov = provenance(cfg);
  RunConfig one = cfg;
  one.eval.n_tasks = std::min(cfg.eval.n_tasks, 1);
  for (TaskKind kind : opts.tasks) {
    const SuiteResult r = run_suite(one, kind, methods, model, reg ? &*reg : nullptr, opts.log);
    for (const auto &run : r.runs)
      write_text_file(dir / (run.task_id + "-" + run.method + ".ndjson"), serialize_mpc_log(run.log, prov));
    for (const auto &sr : r.sorts) {
      std::string text;
      for (const auto &l : sr.outcome.logs) text += serialize_mpc_log(l, prov);
      write_text_file(dir / (sr.task_id + "-" + sr.method + ".ndjson"), text);
    }
  }
  write_config_copy(cfg, dir);
}

}  // namespace dynres
