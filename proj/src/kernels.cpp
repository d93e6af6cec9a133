#include "dynres/kernels.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace dynres::kernels {

namespace {

constexpr long kParallelWork = 1 << 15;

inline void nearest_one(Vec2 p, std::span<const Vec2> to, int &best_j, double &best_d2) {
  best_j = 0;
  best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < to.size(); ++j) {
    const double d2 = norm2(p - to[j]);
    if (d2 < best_d2) {
      best_d2 = d2;
      best_j = static_cast<int>(j);
    }
  }
}

void check_fps_args(std::span<const Vec2> points, int count, int start) {
  if (count < 1 || count > static_cast<int>(points.size()))
    throw std::invalid_argument("farthest_point_sampling: count out of range");
  if (start < 0 || start >= static_cast<int>(points.size()))
    throw std::invalid_argument("farthest_point_sampling: start out of range");
}

// Neighbours of i within radius, sorted by (distance, index), truncated to k.
void knn_row(std::span<const Vec2> points, int i, double r2, int k,
             std::vector<std::pair<double, int>> &scratch, std::vector<int> &out) {
  scratch.clear();
  const Vec2 pi = points[i];
  for (std::size_t j = 0; j < points.size(); ++j) {
    if (static_cast<int>(j) == i) continue;
    const double d2 = norm2(pi - points[j]);
    if (d2 < r2) scratch.emplace_back(d2, static_cast<int>(j));
  }
  const auto keep = std::min<std::size_t>(scratch.size(), static_cast<std::size_t>(k));
  std::partial_sort(scratch.begin(), scratch.begin() + static_cast<long>(keep), scratch.end());
  out.clear();
  for (std::size_t q = 0; q < keep; ++q) out.push_back(scratch[q].second);
}

}  // namespace

NearestResult nearest(std::span<const Vec2> from, std::span<const Vec2> to) {
  if (to.empty()) throw std::invalid_argument("nearest: empty target set");
  NearestResult res;
  const long n = static_cast<long>(from.size());
  res.argmin.resize(from.size());
  res.dist.resize(from.size());
#pragma omp parallel for schedule(static) if (n * static_cast<long>(to.size()) > kParallelWork)
  for (long i = 0; i < n; ++i) {
    int j = 0;
    double d2 = 0.0;
    nearest_one(from[i], to, j, d2);
    res.argmin[i] = j;
    res.dist[i] = std::sqrt(d2);
  }
  for (double d : res.dist) res.sum += d;
  return res;
}

std::vector<int> farthest_point_sampling(std::span<const Vec2> points, int count,
                                         int start) {
  check_fps_args(points, count, start);
  const long n = static_cast<long>(points.size());
  std::vector<double> mind(points.size(), std::numeric_limits<double>::infinity());
  std::vector<int> picked;
  picked.reserve(count);
  int cur = start;
  for (int s = 0; s < count; ++s) {
    picked.push_back(cur);
    const Vec2 c = points[cur];
#pragma omp parallel for schedule(static) if (n > kParallelWork / 8)
    for (long i = 0; i < n; ++i) mind[i] = std::min(mind[i], norm2(points[i] - c));
    // argmax with lowest-index tie break; selected points have mind 0
    int best = 0;
    double best_d = -1.0;
    for (long i = 0; i < n; ++i) {
      if (mind[i] > best_d) {
        best_d = mind[i];
        best = static_cast<int>(i);
      }
    }
    cur = best;
  }
  return picked;
}

std::vector<std::pair<int, int>> radius_knn_edges(std::span<const Vec2> points,
                                                  double radius, int k) {
  const long n = static_cast<long>(points.size());
  std::vector<std::vector<int>> rows(points.size());
  const double r2 = radius * radius;
#pragma omp parallel if (n * n > kParallelWork)
  {
    std::vector<std::pair<double, int>> scratch;
#pragma omp for schedule(static)
    for (long i = 0; i < n; ++i) knn_row(points, static_cast<int>(i), r2, k, scratch, rows[i]);
  }
  std::vector<std::pair<int, int>> edges;
  for (long i = 0; i < n; ++i)
    for (int j : rows[i]) edges.emplace_back(static_cast<int>(i), j);
  return edges;
}

void gemm(std::span<const double> a, std::span<const double> b, std::span<double> c,
          int m, int n, int p) {
#pragma omp parallel for schedule(static) if (static_cast<long>(m) * n * p > kParallelWork * 8)
  for (int i = 0; i < m; ++i) {
    double *ci = c.data() + static_cast<std::size_t>(i) * p;
    std::fill(ci, ci + p, 0.0);
    const double *ai = a.data() + static_cast<std::size_t>(i) * n;
    for (int q = 0; q < n; ++q) {
      const double av = ai[q];
      if (av == 0.0) continue;
      const double *bq = b.data() + static_cast<std::size_t>(q) * p;
      for (int j = 0; j < p; ++j) ci[j] += av * bq[j];
    }
  }
}

void gemm_at_b_acc(std::span<const double> a, std::span<const double> b,
                   std::span<double> c, int n, int m, int p) {
  // rows of C are independent; each reads column i of A
#pragma omp parallel for schedule(static) if (static_cast<long>(m) * n * p > kParallelWork * 8)
  for (int i = 0; i < m; ++i) {
    double *ci = c.data() + static_cast<std::size_t>(i) * p;
    for (int r = 0; r < n; ++r) {
      const double av = a[static_cast<std::size_t>(r) * m + i];
      if (av == 0.0) continue;
      const double *br = b.data() + static_cast<std::size_t>(r) * p;
      for (int j = 0; j < p; ++j) ci[j] += av * br[j];
    }
  }
}

void gemm_a_bt_acc(std::span<const double> a, std::span<const double> b,
                   std::span<double> c, int m, int n, int p) {
#pragma omp parallel for schedule(static) if (static_cast<long>(m) * n * p > kParallelWork * 8)
  for (int i = 0; i < m; ++i) {
    const double *ai = a.data() + static_cast<std::size_t>(i) * n;
    double *ci = c.data() + static_cast<std::size_t>(i) * p;
    for (int j = 0; j < p; ++j) {
      const double *bj = b.data() + static_cast<std::size_t>(j) * n;
      double s = 0.0;
      for (int q = 0; q < n; ++q) s += ai[q] * bj[q];
      ci[j] += s;
    }
  }
}

namespace serial {

NearestResult nearest(std::span<const Vec2> from, std::span<const Vec2> to) {
  if (to.empty()) throw std::invalid_argument("nearest: empty target set");
  NearestResult res;
  for (const Vec2 &p : from) {
    int j = 0;
    double d2 = 0.0;
    nearest_one(p, to, j, d2);
    res.argmin.push_back(j);
    res.dist.push_back(std::sqrt(d2));
  }
  for (double d : res.dist) res.sum += d;
  return res;
}

std::vector<int> farthest_point_sampling(std::span<const Vec2> points, int count,
                                         int start) {
  check_fps_args(points, count, start);
  std::vector<int> picked{start};
  while (static_cast<int>(picked.size()) < count) {
    int best = -1;
    double best_d = -1.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      double mind = std::numeric_limits<double>::infinity();
      for (int s : picked) mind = std::min(mind, norm2(points[i] - points[s]));
      if (mind > best_d) {
        best_d = mind;
        best = static_cast<int>(i);
      }
    }
    picked.push_back(best);
  }
  return picked;
}

std::vector<std::pair<int, int>> radius_knn_edges(std::span<const Vec2> points,
                                                  double radius, int k) {
  std::vector<std::pair<int, int>> edges;
  std::vector<std::pair<double, int>> scratch;
  std::vector<int> row;
  for (std::size_t i = 0; i < points.size(); ++i) {
    knn_row(points, static_cast<int>(i), radius * radius, k, scratch, row);
    for (int j : row) edges.emplace_back(static_cast<int>(i), j);
  }
  return edges;
}

void gemm(std::span<const double> a, std::span<const double> b, std::span<double> c,
          int m, int n, int p) {
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < p; ++j) {
      double s = 0.0;
      for (int q = 0; q < n; ++q) s += a[i * n + q] * b[q * p + j];
      c[i * p + j] = s;
    }
}

void gemm_at_b_acc(std::span<const double> a, std::span<const double> b,
                   std::span<double> c, int n, int m, int p) {
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < p; ++j) {
      double s = 0.0;
      for (int r = 0; r < n; ++r) s += a[r * m + i] * b[r * p + j];
      c[i * p + j] += s;
    }
}

void gemm_a_bt_acc(std::span<const double> a, std::span<const double> b,
                   std::span<double> c, int m, int n, int p) {
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < p; ++j) {
      double s = 0.0;
      for (int q = 0; q < n; ++q) s += a[i * n + q] * b[j * n + q];
      c[i * p + j] += s;
    }
}

}  // namespace serial

}  // namespace dynres::kernels
