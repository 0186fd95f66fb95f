#include "delusim/kernels.hpp"

#include <cstdint>

namespace delusim::kernels {

namespace serial {

void affine_rows(std::span<const double> x, std::size_t n, std::size_t d,
                 std::span<const double> w, double bias, std::span<double> y) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = x.data() + i * d;
    double acc = bias;
    for (std::size_t j = 0; j < d; ++j) acc += row[j] * w[j];
    y[i] = acc;
  }
}

void weighted_column_sums(std::span<const double> x, std::size_t n, std::size_t d,
                          std::span<const double> r, std::span<double> g) {
  for (std::size_t j = 0; j < d; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i * d + j] * r[i];
    g[j] = acc;
  }
}

void nearest_centroid(std::span<const double> points, std::size_t n,
                      std::span<const double> centroids, std::size_t k, std::size_t d,
                      std::span<int> assignment, std::span<double> sims) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* p = points.data() + i * d;
    int best = 0;
    double best_sim = -2.0;
    for (std::size_t c = 0; c < k; ++c) {
      const double* ctr = centroids.data() + c * d;
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += p[j] * ctr[j];
      if (s > best_sim) {
        best_sim = s;
        best = static_cast<int>(c);
      }
    }
    assignment[i] = best;
    sims[i] = best_sim;
  }
}

}  // namespace serial

void affine_rows(std::span<const double> x, std::size_t n, std::size_t d,
                 std::span<const double> w, double bias, std::span<double> y) {
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
    const double* row = x.data() + static_cast<std::size_t>(i) * d;
    double acc = bias;
    for (std::size_t j = 0; j < d; ++j) acc += row[j] * w[j];
    y[static_cast<std::size_t>(i)] = acc;
  }
}

void weighted_column_sums(std::span<const double> x, std::size_t n, std::size_t d,
                          std::span<const double> r, std::span<double> g) {
#pragma omp parallel for schedule(static)
  for (std::int64_t j = 0; j < static_cast<std::int64_t>(d); ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i * d + static_cast<std::size_t>(j)] * r[i];
    g[static_cast<std::size_t>(j)] = acc;
  }
}

void nearest_centroid(std::span<const double> points, std::size_t n,
                      std::span<const double> centroids, std::size_t k, std::size_t d,
                      std::span<int> assignment, std::span<double> sims) {
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
    const double* p = points.data() + static_cast<std::size_t>(i) * d;
    int best = 0;
    double best_sim = -2.0;
    for (std::size_t c = 0; c < k; ++c) {
      const double* ctr = centroids.data() + c * d;
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += p[j] * ctr[j];
      if (s > best_sim) {
        best_sim = s;
        best = static_cast<int>(c);
      }
    }
    assignment[static_cast<std::size_t>(i)] = best;
    sims[static_cast<std::size_t>(i)] = best_sim;
  }
}

}  // namespace delusim::kernels
