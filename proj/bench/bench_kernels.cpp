#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "delusim/common.hpp"
#include "delusim/kernels.hpp"

using namespace delusim;

namespace {

struct Fixture {
  std::size_t n, d, k;
  std::vector<double> x, w, r, centroids, y, sims;
  std::vector<int> assignment;

  Fixture(std::size_t n_, std::size_t d_, std::size_t k_ = 8) : n(n_), d(d_), k(k_) {
    std::mt19937_64 rng(12345);
    x.resize(n * d);
    for (auto& v : x) v = next_gaussian(rng);
    w.resize(d);
    for (auto& v : w) v = next_gaussian(rng);
    r.resize(n);
    for (auto& v : r) v = next_gaussian(rng);
    centroids.resize(k * d);
    for (auto& v : centroids) v = next_gaussian(rng);
    for (std::size_t c = 0; c < k; ++c) {
      double norm = 0;
      for (std::size_t j = 0; j < d; ++j) norm += centroids[c * d + j] * centroids[c * d + j];
      norm = std::sqrt(norm);
      for (std::size_t j = 0; j < d; ++j) centroids[c * d + j] /= norm;
    }
    y.resize(n);
    sims.resize(n);
    assignment.resize(n);
  }
};

void BM_affine_rows_parallel(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)), 384);
  for (auto _ : state) {
    kernels::affine_rows(f.x, f.n, f.d, f.w, 0.1, f.y);
    benchmark::DoNotOptimize(f.y.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.n));
}

void BM_affine_rows_serial(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)), 384);
  for (auto _ : state) {
    kernels::serial::affine_rows(f.x, f.n, f.d, f.w, 0.1, f.y);
    benchmark::DoNotOptimize(f.y.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.n));
}

void BM_weighted_column_sums_parallel(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)), 384);
  std::vector<double> g(f.d);
  for (auto _ : state) {
    kernels::weighted_column_sums(f.x, f.n, f.d, f.r, g);
    benchmark::DoNotOptimize(g.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.n));
}

void BM_weighted_column_sums_serial(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)), 384);
  std::vector<double> g(f.d);
  for (auto _ : state) {
    kernels::serial::weighted_column_sums(f.x, f.n, f.d, f.r, g);
    benchmark::DoNotOptimize(g.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.n));
}

void BM_nearest_centroid_parallel(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)), 384, 16);
  for (auto _ : state) {
    kernels::nearest_centroid(f.x, f.n, f.centroids, f.k, f.d, f.assignment, f.sims);
    benchmark::DoNotOptimize(f.assignment.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.n));
}

void BM_nearest_centroid_serial(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)), 384, 16);
  for (auto _ : state) {
    kernels::serial::nearest_centroid(f.x, f.n, f.centroids, f.k, f.d, f.assignment, f.sims);
    benchmark::DoNotOptimize(f.assignment.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.n));
}

}  // namespace

BENCHMARK(BM_affine_rows_parallel)->Arg(1000)->Arg(10000)->Arg(50000);
BENCHMARK(BM_affine_rows_serial)->Arg(1000)->Arg(10000)->Arg(50000);
BENCHMARK(BM_weighted_column_sums_parallel)->Arg(1000)->Arg(10000)->Arg(50000);
BENCHMARK(BM_weighted_column_sums_serial)->Arg(1000)->Arg(10000)->Arg(50000);
BENCHMARK(BM_nearest_centroid_parallel)->Arg(1000)->Arg(10000);
BENCHMARK(BM_nearest_centroid_serial)->Arg(1000)->Arg(10000);

BENCHMARK_MAIN();
