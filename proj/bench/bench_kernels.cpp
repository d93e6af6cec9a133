// OpenMP kernels against their serial references at planner-sized inputs.

#include <benchmark/benchmark.h>

#include <vector>

#include "dynres/kernels.hpp"
#include "dynres/util.hpp"

namespace {

using namespace dynres;

std::vector<Vec2> cloud(int n, std::uint64_t seed, double extent) {
  Rng rng(seed);
  std::vector<Vec2> p;
  for (int i = 0; i < n; ++i) p.push_back({rng.uniform(0, extent), rng.uniform(0, extent)});
  return p;
}

std::vector<double> values(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(rng.uniform(-1, 1));
  return v;
}

// particles against a goal region, as in the objective
template <auto Fn>
void BM_Nearest(benchmark::State &state) {
  const auto from = cloud(static_cast<int>(state.range(0)), 1, 64.0);
  const auto to = cloud(600, 2, 64.0);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(from, to));
}

template <auto Fn>
void BM_Fps(benchmark::State &state) {
  const auto pts = cloud(2000, 3, 0.5);
  const int count = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(Fn(pts, count, 0));
}

template <auto Fn>
void BM_Edges(benchmark::State &state) {
  const auto pts = cloud(static_cast<int>(state.range(0)), 4, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(pts, 0.05, 8));
}

// message-passing sized products: (omega x hidden) * (hidden x hidden)
template <auto Fn>
void BM_Gemm(benchmark::State &state) {
  const int m = static_cast<int>(state.range(0)), n = 32, p = 32;
  const auto a = values(m * n, 5), b = values(n * p, 6);
  std::vector<double> c(static_cast<std::size_t>(m * p));
  for (auto _ : state) {
    Fn(a, b, c, m, n, p);
    benchmark::ClobberMemory();
  }
}

using NearestFn = kernels::NearestResult (*)(std::span<const Vec2>, std::span<const Vec2>);
using FpsFn = std::vector<int> (*)(std::span<const Vec2>, int, int);
using EdgesFn = std::vector<std::pair<int, int>> (*)(std::span<const Vec2>, double, int);
using GemmFn = void (*)(std::span<const double>, std::span<const double>, std::span<double>, int, int, int);

constexpr NearestFn kNearest = kernels::nearest, kNearestSerial = kernels::serial::nearest;
constexpr FpsFn kFps = kernels::farthest_point_sampling, kFpsSerial = kernels::serial::farthest_point_sampling;
constexpr EdgesFn kEdges = kernels::radius_knn_edges, kEdgesSerial = kernels::serial::radius_knn_edges;
constexpr GemmFn kGemm = kernels::gemm, kGemmSerial = kernels::serial::gemm;

BENCHMARK(BM_Nearest<kNearest>)->Name("nearest/parallel")->Arg(100)->Arg(1000);
BENCHMARK(BM_Nearest<kNearestSerial>)->Name("nearest/serial")->Arg(100)->Arg(1000);
BENCHMARK(BM_Fps<kFps>)->Name("fps/parallel")->Arg(10)->Arg(100);
BENCHMARK(BM_Fps<kFpsSerial>)->Name("fps/serial")->Arg(10)->Arg(100);
BENCHMARK(BM_Edges<kEdges>)->Name("edges/parallel")->Arg(50)->Arg(200);
BENCHMARK(BM_Edges<kEdgesSerial>)->Name("edges/serial")->Arg(50)->Arg(200);
BENCHMARK(BM_Gemm<kGemm>)->Name("gemm/parallel")->Arg(100)->Arg(1000);
BENCHMARK(BM_Gemm<kGemmSerial>)->Name("gemm/serial")->Arg(100)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
