#pragma once

// Data-parallel inner loops shared by perception, the objectives and the
// autodiff matmul. Every kernel has an OpenMP version (dynres::kernels) and a
// plain serial reference (dynres::kernels::serial); the tests compare the two
// and bench_kernels times them.
//
// Parallel kernels write per-element results and reduce serially, so the
// output does not depend on the thread count. The accumulating gemms may
// differ from the serial reference by rounding; all other kernels match it
// bit for bit.

#include <span>
#include <utility>
#include <vector>

#include "dynres/geometry.hpp"

namespace dynres::kernels {

struct NearestResult {
  double sum = 0.0;           // sum over `from` of the min distance to `to`
  std::vector<int> argmin;    // per `from` point, index into `to` (lowest on ties)
  std::vector<double> dist;   // per `from` point, the min distance
};

/// For each point of `from`, the nearest point of `to`. `to` must be non-empty.
NearestResult nearest(std::span<const Vec2> from, std::span<const Vec2> to);

/// Greedy farthest point sampling; ties resolve to the lowest index.
std::vector<int> farthest_point_sampling(std::span<const Vec2> points, int count,
                                         int start);

/// Directed edges (receiver i, sender j): |p_i - p_j| < radius and j is among
/// the k nearest neighbours of i (distance ties broken by lower index).
std::vector<std::pair<int, int>> radius_knn_edges(std::span<const Vec2> points,
                                                  double radius, int k);

/// C = A * B, row-major. A is m x n, B is n x p, C is m x p (overwritten).
void gemm(std::span<const double> a, std::span<const double> b, std::span<double> c,
          int m, int n, int p);
/// C += A^T * B.  A is n x m, B is n x p, C is m x p.
void gemm_at_b_acc(std::span<const double> a, std::span<const double> b,
                   std::span<double> c, int n, int m, int p);
/// C += A * B^T.  A is m x n, B is p x n, C is m x p.
void gemm_a_bt_acc(std::span<const double> a, std::span<const double> b,
                   std::span<double> c, int m, int n, int p);

namespace serial {
NearestResult nearest(std::span<const Vec2> from, std::span<const Vec2> to);
std::vector<int> farthest_point_sampling(std::span<const Vec2> points, int count,
                                         int start);
std::vector<std::pair<int, int>> radius_knn_edges(std::span<const Vec2> points,
                                                  double radius, int k);
void gemm(std::span<const double> a, std::span<const double> b, std::span<double> c,
          int m, int n, int p);
void gemm_at_b_acc(std::span<const double> a, std::span<const double> b,
                   std::span<double> c, int n, int m, int p);
void gemm_a_bt_acc(std::span<const double> a, std::span<const double> b,
                   std::span<double> c, int m, int n, int p);
}  // namespace serial

}  // namespace dynres::kernels
