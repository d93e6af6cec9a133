#include "dynres/objective.hpp"

#include <algorithm>
#include <stdexcept>

#include "dynres/kernels.hpp"
#include "dynres/perception.hpp"

namespace dynres {

GoalSpec make_goal(std::vector<std::uint8_t> heatmap, const PixelTransform &transform,
                   int subset_size) {
  if (heatmap.size() != static_cast<std::size_t>(transform.rows) * transform.cols)
    throw std::invalid_argument("goal: heatmap size does not match transform");
  if (subset_size < 1) throw std::invalid_argument("goal: subset size must be >= 1");
  GoalSpec g;
  g.transform = transform;
  for (int r = 0; r < transform.rows; ++r)
    for (int c = 0; c < transform.cols; ++c)
      if (heatmap[static_cast<std::size_t>(r) * transform.cols + c])
        g.goal_points.push_back(transform.cell_center(r, c));
  if (g.goal_points.empty()) throw std::invalid_argument("goal: empty goal region");
  g.heatmap = std::move(heatmap);
  const int m = std::min<int>(subset_size, static_cast<int>(g.goal_points.size()));
  for (int i : fps(g.goal_points, m, fps_start_index(g.goal_points)))
    g.goal_subset.push_back(g.goal_points[static_cast<std::size_t>(i)]);
  return g;
}

std::vector<std::uint8_t> disk_heatmap(const PixelTransform &t, Vec2 center_m, double radius_m) {
  std::vector<std::uint8_t> h(static_cast<std::size_t>(t.rows) * t.cols, 0);
  const double r_px = radius_m / t.cell_size;
  const Vec2 c = t.to_pixel(center_m);
  for (int r = 0; r < t.rows; ++r)
    for (int col = 0; col < t.cols; ++col)
      if (norm2(t.cell_center(r, col) - c) <= r_px * r_px)
        h[static_cast<std::size_t>(r) * t.cols + col] = 1;
  return h;
}

namespace {

std::vector<Vec2> to_pixels(const std::vector<Vec2> &m, const PixelTransform &t) {
  std::vector<Vec2> out;
  out.reserve(m.size());
  for (Vec2 p : m) out.push_back(t.to_pixel(p));
  return out;
}

std::vector<Vec2> rows_as_points(const ad::Matrix &m) {
  std::vector<Vec2> out(static_cast<std::size_t>(m.rows));
  for (int i = 0; i < m.rows; ++i) out[i] = {m(i, 0), m(i, 1)};
  return out;
}

}  // namespace

double task_objective(const std::vector<Vec2> &particles, const GoalSpec &goal) {
  if (goal.goal_points.empty()) throw std::invalid_argument("task_objective: empty goal");
  if (particles.empty()) throw std::invalid_argument("task_objective: no particles");
  const auto px = to_pixels(particles, goal.transform);
  return kernels::nearest(px, goal.goal_points).sum + kernels::nearest(goal.goal_subset, px).sum;
}

ad::Var task_objective_tape(ad::Tape &t, ad::Var positions, const GoalSpec &goal) {
  if (goal.goal_points.empty()) throw std::invalid_argument("task_objective: empty goal");
  const ad::Matrix m = t.value(positions);  // copy: pushing nodes may reallocate the tape
  if (m.rows == 0 || m.cols != 2) throw std::invalid_argument("task_objective: bad positions");
  const PixelTransform &tr = goal.transform;
  const ad::Var px = t.scale(
      t.add_row(positions, t.constant(ad::Matrix(1, 2, {-tr.origin.x, -tr.origin.y}))),
      1.0 / tr.cell_size);
  const auto cur = to_pixels(rows_as_points(m), tr);

  const auto fwd = kernels::nearest(cur, goal.goal_points);
  std::vector<Vec2> matched;
  matched.reserve(fwd.argmin.size());
  for (int j : fwd.argmin) matched.push_back(goal.goal_points[static_cast<std::size_t>(j)]);
  ad::Matrix q(static_cast<int>(matched.size()), 2);
  for (std::size_t i = 0; i < matched.size(); ++i) {
    q.data[2 * i] = matched[i].x;
    q.data[2 * i + 1] = matched[i].y;
  }
  const ad::Var d1 = t.sum(t.sqrt(t.row_sum(t.square(t.sub(px, t.constant(std::move(q)))))));

  const auto bwd = kernels::nearest(goal.goal_subset, cur);
  ad::Matrix qs(static_cast<int>(goal.goal_subset.size()), 2);
  for (std::size_t i = 0; i < goal.goal_subset.size(); ++i) {
    qs.data[2 * i] = goal.goal_subset[i].x;
    qs.data[2 * i + 1] = goal.goal_subset[i].y;
  }
  const ad::Var picked = t.gather_rows(px, ad::make_index(bwd.argmin));
  const ad::Var d2 = t.sum(t.sqrt(t.row_sum(t.square(t.sub(picked, t.constant(std::move(qs)))))));
  return t.add(d1, d2);
}

double distribution_distance(const std::vector<Vec2> &f, const GoalSpec &goal, bool normalized) {
  if (f.empty() || goal.goal_points.empty())
    throw std::invalid_argument("distribution_distance: empty foreground or goal");
  const double d = kernels::nearest(f, goal.goal_points).sum + kernels::nearest(goal.goal_points, f).sum;
  return normalized ? d / static_cast<double>(f.size() + goal.goal_points.size()) : d;
}

double distribution_distance(const Observation &obs, const GoalSpec &goal, bool normalized) {
  return distribution_distance(obs.occupied_pixels(), goal, normalized);
}

double task_score(const std::vector<double> &d, double threshold) {
  if (d.empty()) throw std::invalid_argument("task_score: empty list");
  const auto n = std::count_if(d.begin(), d.end(), [&](double v) { return v < threshold; });
  return static_cast<double>(n) / static_cast<double>(d.size());
}

}  // namespace dynres
