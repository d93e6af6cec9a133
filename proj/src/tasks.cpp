#include "dynres/tasks.hpp"

#include <array>
#include <stdexcept>

#include "dynres/util.hpp"

namespace dynres {

TaskKind parse_task_kind(const std::string &s) {
  if (s == "gather") return TaskKind::Gather;
  if (s == "redistribute") return TaskKind::Redistribute;
  if (s == "sort") return TaskKind::Sort;
  throw std::invalid_argument("unknown task kind: " + s);
}

std::string task_kind_name(TaskKind k) {
  switch (k) {
    case TaskKind::Gather: return "gather";
    case TaskKind::Redistribute: return "redistribute";
    case TaskKind::Sort: return "sort";
  }
  return "gather";
}

namespace {

double segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double l2 = norm2(ab);
  const double t = l2 > 0.0 ? std::clamp(dot(p - a, ab) / l2, 0.0, 1.0) : 0.0;
  return norm(p - (a + ab * t));
}

using Stroke = std::array<Vec2, 2>;

std::vector<Stroke> letter_strokes(char letter) {
  switch (letter) {
    case 'T': return {{{{0.0, 1.0}, {1.0, 1.0}}}, {{{0.5, 1.0}, {0.5, 0.0}}}};
    case 'U': return {{{{0.0, 1.0}, {0.0, 0.0}}}, {{{0.0, 0.0}, {1.0, 0.0}}}, {{{1.0, 0.0}, {1.0, 1.0}}}};
    case 'J':
      return {{{{0.2, 1.0}, {1.0, 1.0}}}, {{{0.7, 1.0}, {0.7, 0.0}}}, {{{0.7, 0.0}, {0.0, 0.0}}},
              {{{0.0, 0.0}, {0.0, 0.3}}}};
    default: throw std::invalid_argument(std::string("unsupported letter: ") + letter);
  }
}

Vec2 random_point(Rng &rng, const Rect &ws, double margin) {
  return {rng.uniform(ws.lo.x + margin, ws.hi.x - margin), rng.uniform(ws.lo.y + margin, ws.hi.y - margin)};
}

}  // namespace

std::vector<std::uint8_t> letter_heatmap(const PixelTransform &t, char letter, Vec2 center_m, double size_m,
                                         double stroke_m) {
  const auto strokes = letter_strokes(letter);
  std::vector<std::uint8_t> h(static_cast<std::size_t>(t.rows) * t.cols, 0);
  const Vec2 corner = center_m - Vec2{0.5 * size_m, 0.5 * size_m};
  for (int r = 0; r < t.rows; ++r)
    for (int c = 0; c < t.cols; ++c) {
      const Vec2 p = t.to_meter(t.cell_center(r, c));
      for (const auto &s : strokes)
        if (segment_distance(p, corner + s[0] * size_m, corner + s[1] * size_m) <= 0.5 * stroke_m) {
          h[static_cast<std::size_t>(r) * t.cols + c] = 1;
          break;
        }
    }
  return h;
}

TaskInstance make_task(TaskKind kind, const SimConfig &base, const TaskConfig &cfg, std::uint64_t seed,
                       int index) {
  TaskInstance task;
  task.kind = kind;
  task.id = task_kind_name(kind) + "-" + std::to_string(index);
  task.sim = base;
  const std::uint64_t s = derive_seed(seed, task_kind_name(kind), static_cast<std::uint64_t>(index));
  Rng rng(s);
  const PixelTransform tr = grid_transform(base);
  const Rect &ws = base.workspace;

  switch (kind) {
    case TaskKind::Gather: {
      task.sim.layout = cfg.gather_layout;
      task.sim.uniform_margin = cfg.gather_spread_margin;
      const Vec2 goal = random_point(rng, ws, cfg.goal_margin);
      task.goal = make_goal(disk_heatmap(tr, goal, cfg.goal_radius), tr, cfg.goal_subset);
      break;
    }
    case TaskKind::Redistribute: {
      static constexpr char kLetters[3] = {'J', 'T', 'U'};
      const char letter = kLetters[rng.uniform_int(0, 2)];
      task.sim.layout = Layout::Blob;
      task.sim.blob_radius = cfg.redistribute_pile_radius;
      task.sim.blob_centers = {random_point(rng, ws, cfg.redistribute_pile_radius + 0.05)};
      const Vec2 goal = random_point(rng, ws, 0.5 * cfg.letter_size + 0.03);
      task.id += std::string("-") + letter;
      task.goal = make_goal(letter_heatmap(tr, letter, goal, cfg.letter_size, cfg.letter_stroke), tr,
                            cfg.goal_subset);
      break;
    }
    case TaskKind::Sort: {
      task.sim.layout = Layout::MultiBlob;
      task.sim.n_blobs = 2;
      task.sim.n_materials = 2;
      task.sim.material_per_blob = true;
      task.sim.n_pieces = 2 * cfg.sort_pieces_per_material;
      task.sim.blob_radius = cfg.sort_blob_radius;
      const double r_px = cfg.sort_blob_radius / tr.cell_size;
      task.blobs.grid = make_sparse_grid(tr, r_px);
      task.blobs.radius = r_px;
      const SparseGrid &g = task.blobs.grid;
      // four distinct interior cells: two starts, two goals
      std::vector<GridCell> cells;
      while (cells.size() < 4) {
        const GridCell c{rng.uniform_int(0, g.nx - 1), rng.uniform_int(0, g.ny - 1)};
        bool fresh = true;
        for (const auto &o : cells) fresh = fresh && !(o == c);
        if (fresh) cells.push_back(c);
      }
      task.blobs.centers = {cells[0], cells[1]};
      task.blob_goal = {cells[2], cells[3]};
      task.sim.blob_centers.clear();
      for (const auto &c : task.blobs.centers) task.sim.blob_centers.push_back(tr.to_meter(g.point(c)));
      std::vector<std::uint8_t> all(static_cast<std::size_t>(tr.rows) * tr.cols, 0);
      for (const auto &c : task.blob_goal) {
        auto h = disk_heatmap(tr, tr.to_meter(g.point(c)), cfg.sort_goal_radius);
        for (std::size_t i = 0; i < h.size(); ++i) all[i] |= h[i];
        task.material_goals.push_back(make_goal(std::move(h), tr, cfg.goal_subset));
      }
      task.goal = make_goal(std::move(all), tr, cfg.goal_subset);
      break;
    }
  }
  task.start = init_scene(task.sim, derive_seed(s, "scene"));
  return task;
}

SortOutcome run_sort_task(const TaskInstance &task, const TaskConfig &cfg, const GnnParams &model,
                          const PerceptionParams &perception, const ResolutionPolicy &policy,
                          const SortExecConfig &exec, std::uint64_t seed) {
  if (task.kind != TaskKind::Sort) throw std::invalid_argument("run_sort_task: not a sort task");
  SortOutcome out;
  PileState env = task.start;
  const PixelTransform tr = grid_transform(task.sim);
  out.plan = astar(task.blobs, task.blob_goal, exec.astar);
  std::uint64_t round = 0;
  auto drive = [&](int material, const GoalSpec &goal, int steps, double threshold) {
    MpcConfig mc = exec.mpc;
    mc.steps = steps;
    mc.success_threshold = threshold;
    out.logs.push_back(run_mpc(task.sim, env, goal, model, perception, policy, mc,
                               derive_seed(seed, "sort.mpc", round++), material));
    out.total_steps += static_cast<int>(out.logs.back().steps.size());
  };
  if (out.plan.solvable) {
    for (const Subgoal &sg : to_subgoals(out.plan, exec.merge_horizon)) {
      const Vec2 c = tr.to_meter(task.blobs.grid.point(sg.cell));
      drive(sg.blob, make_goal(disk_heatmap(tr, c, cfg.sort_goal_radius), tr, cfg.goal_subset),
            exec.max_steps_per_subgoal, exec.subgoal_threshold);
    }
  }
  for (int m = 0; m < static_cast<int>(task.material_goals.size()); ++m)
    drive(m, task.material_goals[m], exec.final_steps, exec.task_threshold);
  out.success = true;
  for (int m = 0; m < static_cast<int>(task.material_goals.size()); ++m) {
    const double d = distribution_distance(observe_for(task.sim, env, m), task.material_goals[m]);
    out.final_distances.push_back(d);
    out.success = out.success && d < exec.task_threshold;
  }
  return out;
}

}  // namespace dynres
