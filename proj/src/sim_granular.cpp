#include "dynres/sim_granular.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dynres {

namespace {

constexpr std::uint64_t kTagScatterAcross = 1;
constexpr std::uint64_t kTagScatterAlong = 2;
constexpr std::uint64_t kTagSeparate = 3;

const MaterialDynamics &material_of(const SimConfig &config, int label) {
  static const MaterialDynamics kDefault{};
  if (label < 0 || label >= static_cast<int>(config.materials.size())) return kDefault;
  return config.materials[static_cast<std::size_t>(label)];
}

Rect shrink(const Rect &r, double m) {
  return {{r.lo.x + m, r.lo.y + m}, {r.hi.x - m, r.hi.y - m}};
}

Vec2 uniform_in_disk(Rng &rng, Vec2 c, double radius) {
  const double r = radius * std::sqrt(rng.uniform());
  const double t = rng.uniform(0.0, 2.0 * std::numbers::pi);
  return {c.x + r * std::cos(t), c.y + r * std::sin(t)};
}

// Uniform cell list over the workspace for the overlap sweeps.
struct CellList {
  double cell;
  Vec2 origin;
  int nx, ny;
  std::vector<int> head, next;

  CellList(const Rect &ws, double cell_size, std::size_t n)
      : cell(cell_size), origin(ws.lo),
        nx(std::max(1, static_cast<int>(std::ceil(ws.width() / cell_size)) + 1)),
        ny(std::max(1, static_cast<int>(std::ceil(ws.height() / cell_size)) + 1)),
        head(static_cast<std::size_t>(nx) * ny, -1), next(n, -1) {}

  int cx(Vec2 p) const { return std::clamp(static_cast<int>((p.x - origin.x) / cell), 0, nx - 1); }
  int cy(Vec2 p) const { return std::clamp(static_cast<int>((p.y - origin.y) / cell), 0, ny - 1); }

  void build(const std::vector<Vec2> &pts) {
    std::fill(head.begin(), head.end(), -1);
    // reverse insertion keeps each bucket in ascending index order
    for (int i = static_cast<int>(pts.size()) - 1; i >= 0; --i) {
      const auto b = static_cast<std::size_t>(cy(pts[i])) * nx + cx(pts[i]);
      next[i] = head[b];
      head[b] = i;
    }
  }
};

}  // namespace

SweepCoords sweep_coords(const Action &a, Vec2 p) {
  const Vec2 rel = p - a.start;
  return {dot(rel, a.direction()), dot(rel, a.normal())};
}

bool in_sweep(const Action &a, Vec2 p) {
  const SweepCoords s = sweep_coords(a, p);
  return s.along >= 0.0 && s.along <= a.length && std::abs(s.across) <= 0.5 * a.pusher_width;
}

void SimConfig::validate() const {
  if (n_pieces < 1) throw std::invalid_argument("SimConfig: n_pieces must be >= 1");
  if (!(piece_radius > 0.0) || !(repulsion_radius > 0.0) || !(spread_sigma >= 0.0) ||
      !(max_push_carry > 0.0) || !(blob_radius > 0.0))
    throw std::invalid_argument("SimConfig: lengths must be positive");
  if (!(workspace.width() > 0.0) || !(workspace.height() > 0.0))
    throw std::invalid_argument("SimConfig: empty workspace");
  if (grid_rows < 1 || grid_cols < 1) throw std::invalid_argument("SimConfig: empty grid");
  if (!(action.len_min > 0.0) || action.len_max < action.len_min || !(action.pusher_width > 0.0))
    throw std::invalid_argument("SimConfig: bad action bounds");
  if (n_materials < 1 || n_blobs < 1) throw std::invalid_argument("SimConfig: counts must be >= 1");
  // disks of diameter repulsion_radius must pack comfortably
  const double disk = std::numbers::pi * 0.25 * repulsion_radius * repulsion_radius;
  if (n_pieces * disk > 0.6 * workspace.width() * workspace.height())
    throw std::invalid_argument("SimConfig: pieces cannot fit in the workspace");
}

void PileState::validate() const {
  if (positions.empty()) throw std::invalid_argument("PileState: no pieces");
  if (material.size() != positions.size())
    throw std::invalid_argument("PileState: material/position length mismatch");
  for (const Vec2 &p : positions)
    if (!workspace.contains(p, piece_radius))
      throw std::invalid_argument("PileState: piece outside workspace");
}

int relax_overlaps(const SimConfig &config, std::vector<Vec2> &pos, std::uint64_t seed,
                   int step) {
  const double rr = config.repulsion_radius;
  const double rr2 = rr * rr;
  CellList cells(config.workspace, rr, pos.size());
  int sweep = 0;
  for (; sweep < config.relax_max_iters; ++sweep) {
    cells.build(pos);
    double worst = 0.0;
    for (std::size_t i = 0; i < pos.size(); ++i) {
      const int cx = cells.cx(pos[i]);
      const int cy = cells.cy(pos[i]);
      for (int gy = std::max(0, cy - 1); gy <= std::min(cells.ny - 1, cy + 1); ++gy)
        for (int gx = std::max(0, cx - 1); gx <= std::min(cells.nx - 1, cx + 1); ++gx)
          for (int j = cells.head[static_cast<std::size_t>(gy) * cells.nx + gx]; j != -1;
               j = cells.next[j]) {
            if (j <= static_cast<int>(i)) continue;
            Vec2 d = pos[j] - pos[i];
            const double d2 = norm2(d);
            if (d2 >= rr2) continue;
            double len = std::sqrt(d2);
            if (len < 1e-12) {
              const double t = 2.0 * std::numbers::pi *
                               key_uniform(hash_key(seed, kTagSeparate, i * 7919 + j, step));
              d = {std::cos(t), std::sin(t)};
              len = 0.0;
            } else {
              d = d * (1.0 / len);
            }
            const double overlap = rr - len;
            worst = std::max(worst, overlap);
            pos[i] = config.workspace.clamp(pos[i] - d * (0.5 * overlap));
            pos[j] = config.workspace.clamp(pos[j] + d * (0.5 * overlap));
          }
    }
    if (worst < config.relax_tol) break;
  }
  return sweep;
}

PileState init_scene(const SimConfig &config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  PileState st;
  st.piece_radius = config.piece_radius;
  st.workspace = config.workspace;
  st.rng_seed = seed;
  const int n = config.n_pieces;
  st.positions.resize(static_cast<std::size_t>(n));
  st.material.assign(static_cast<std::size_t>(n), 0);

  if (config.layout == Layout::Uniform) {
    const Rect area = shrink(config.workspace, config.uniform_margin);
    for (int i = 0; i < n; ++i) {
      st.positions[i] = {rng.uniform(area.lo.x, area.hi.x), rng.uniform(area.lo.y, area.hi.y)};
      st.material[i] = config.n_materials > 1 ? rng.uniform_int(0, config.n_materials - 1) : 0;
    }
  } else {
    const int nb = config.layout == Layout::Blob ? 1 : config.n_blobs;
    std::vector<Vec2> centers = config.blob_centers;
    if (static_cast<int>(centers.size()) < nb) {
      const Rect area = shrink(config.workspace, config.blob_margin);
      if (area.width() < 0 || area.height() < 0)
        throw std::invalid_argument("SimConfig: blob margin leaves no room");
      int attempts = 0;
      while (static_cast<int>(centers.size()) < nb) {
        const Vec2 c{rng.uniform(area.lo.x, area.hi.x), rng.uniform(area.lo.y, area.hi.y)};
        bool ok = true;
        for (const Vec2 &o : centers) ok = ok && distance(o, c) >= 2.5 * config.blob_radius;
        if (ok || ++attempts > 1000) centers.push_back(c);
      }
    }
    centers.resize(static_cast<std::size_t>(nb));
    std::vector<std::vector<int>> members(static_cast<std::size_t>(nb));
    for (int i = 0; i < n; ++i) {
      const int b = i % nb;
      members[b].push_back(i);
      st.positions[i] = uniform_in_disk(rng, centers[b], config.blob_radius);
      st.material[i] = config.material_per_blob ? b % config.n_materials
                       : config.n_materials > 1 ? rng.uniform_int(0, config.n_materials - 1)
                                                : 0;
    }
    // each blob's mass center sits exactly on its configured center
    for (int b = 0; b < nb; ++b) {
      Vec2 m;
      for (int i : members[b]) m += st.positions[i];
      m = m * (1.0 / static_cast<double>(members[b].size()));
      const Vec2 shift = centers[b] - m;
      for (int i : members[b]) st.positions[i] = config.workspace.clamp(st.positions[i] + shift);
    }
  }
  relax_overlaps(config, st.positions, seed, -1);
  return st;
}

PileState apply_push(const SimConfig &config, const PileState &state, const Action &action) {
  PileState next = state;
  const Vec2 dir = action.direction();
  const Vec2 nrm = action.normal();
  bool moved_any = false;
  for (std::size_t i = 0; i < next.positions.size(); ++i) {
    const Vec2 p = state.positions[i];
    if (!in_sweep(action, p)) continue;
    moved_any = true;
    const MaterialDynamics &md = material_of(config, state.material[i]);
    const SweepCoords sc = sweep_coords(action, p);
    const double carry = std::min(action.length - sc.along, config.max_push_carry) * md.carry;
    const double sigma = config.spread_sigma * md.spread;
    const auto key = static_cast<std::uint64_t>(i);
    const double across =
        sigma * key_normal(hash_key(state.rng_seed, kTagScatterAcross, key, state.step));
    const double along =
        0.5 * sigma * key_normal(hash_key(state.rng_seed, kTagScatterAlong, key, state.step));
    next.positions[i] = p + dir * (carry + along) + nrm * across;
  }
  if (moved_any) relax_overlaps(config, next.positions, state.rng_seed, state.step);
  for (Vec2 &p : next.positions) p = config.workspace.clamp(p);
  next.step = state.step + 1;
  return next;
}

PixelTransform grid_transform(const SimConfig &config) {
  PixelTransform t;
  t.origin = config.workspace.lo;
  t.rows = config.grid_rows;
  t.cols = config.grid_cols;
  t.cell_size = config.workspace.width() / config.grid_cols;
  return t;
}

std::size_t Observation::occupied_count() const {
  return static_cast<std::size_t>(std::count(occupancy.begin(), occupancy.end(), 1));
}

std::vector<Vec2> Observation::occupied_pixels() const {
  std::vector<Vec2> out;
  for (int r = 0; r < rows(); ++r)
    for (int c = 0; c < cols(); ++c)
      if (at(r, c)) out.push_back(transform.cell_center(r, c));
  return out;
}

Observation rasterize(const SimConfig &config, std::vector<Vec2> points,
                      std::vector<int> labels) {
  Observation obs;
  obs.transform = grid_transform(config);
  obs.piece_radius = config.piece_radius;
  obs.occupancy.assign(static_cast<std::size_t>(obs.rows()) * obs.cols(), 0);
  const double rpx = config.piece_radius / obs.transform.cell_size;
  for (const Vec2 &m : points) {
    const Vec2 c = obs.transform.to_pixel(m);
    const int r0 = std::max(0, static_cast<int>(std::floor(c.y - rpx)));
    const int r1 = std::min(obs.rows() - 1, static_cast<int>(std::floor(c.y + rpx)));
    const int c0 = std::max(0, static_cast<int>(std::floor(c.x - rpx)));
    const int c1 = std::min(obs.cols() - 1, static_cast<int>(std::floor(c.x + rpx)));
    for (int r = r0; r <= r1; ++r)
      for (int col = c0; col <= c1; ++col) {
        // closest point of cell [col, col+1) x [r, r+1) to the disk center
        const double qx = std::clamp(c.x, static_cast<double>(col), col + 1.0);
        const double qy = std::clamp(c.y, static_cast<double>(r), r + 1.0);
        if (norm2(Vec2{qx, qy} - c) < rpx * rpx)
          obs.occupancy[static_cast<std::size_t>(r) * obs.cols() + col] = 1;
      }
  }
  obs.points = std::move(points);
  obs.labels = std::move(labels);
  return obs;
}

Observation observe(const SimConfig &config, const PileState &state) {
  return rasterize(config, state.positions, state.material);
}

Observation restrict_material(const SimConfig &config, const Observation &obs, int material) {
  std::vector<Vec2> pts;
  std::vector<int> labels;
  for (std::size_t i = 0; i < obs.points.size(); ++i)
    if (obs.labels[i] == material) {
      pts.push_back(obs.points[i]);
      labels.push_back(material);
    }
  return rasterize(config, std::move(pts), std::move(labels));
}

Action sample_action(const SimConfig &config, Rng &rng) {
  Action a;
  a.start = {rng.uniform(config.workspace.lo.x, config.workspace.hi.x),
             rng.uniform(config.workspace.lo.y, config.workspace.hi.y)};
  a.angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
  a.length = rng.uniform(config.action.len_min, config.action.len_max);
  a.pusher_width = config.action.pusher_width;
  return a;
}

Action sample_targeted_action(const SimConfig &config, const PileState &state, Rng &rng) {
  Action a;
  const Vec2 target = state.positions[static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<int>(state.size()) - 1))];
  a.angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
  a.length = rng.uniform(config.action.len_min, config.action.len_max);
  a.pusher_width = config.action.pusher_width;
  const double back = rng.uniform(0.0, a.length);
  const double side = rng.uniform(-0.5, 0.5) * a.pusher_width;
  a.start = target - a.direction() * back - a.normal() * side;
  return clamp_action(config, a);
}

Action clamp_action(const SimConfig &config, Action a) {
  a.start = config.workspace.clamp(a.start);
  const double two_pi = 2.0 * std::numbers::pi;
  a.angle = std::fmod(a.angle, two_pi);
  if (a.angle < 0.0) a.angle += two_pi;
  if (a.angle >= two_pi) a.angle = 0.0;
  a.length = std::clamp(a.length, config.action.len_min, config.action.len_max);
  a.pusher_width = config.action.pusher_width;
  return a;
}

}  // namespace dynres
