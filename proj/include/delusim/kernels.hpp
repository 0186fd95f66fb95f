#pragma once

#include <cstddef>
#include <span>
#include <vector>

// Data-parallel inner loops shared by the logistic optimizer, clustering,
// and covariate aggregation. Every kernel has a serial reference twin in
// kernels::serial; the parallel versions partition work so that each output
// element is accumulated by exactly one thread in a fixed order, which keeps
// results bitwise identical to the serial path for any thread count.
namespace delusim::kernels {

// y[i] = dot(X row i, w) + bias, X row-major n x d.
void affine_rows(std::span<const double> x, std::size_t n, std::size_t d,
                 std::span<const double> w, double bias, std::span<double> y);

// g[j] = sum_i X[i][j] * r[i]  (parallel over columns).
void weighted_column_sums(std::span<const double> x, std::size_t n, std::size_t d,
                          std::span<const double> r, std::span<double> g);

// For each unit row of `points`, index of the max-dot-product unit row of
// `centroids` (ties -> lower index); sims[i] receives the winning dot product.
void nearest_centroid(std::span<const double> points, std::size_t n,
                      std::span<const double> centroids, std::size_t k, std::size_t d,
                      std::span<int> assignment, std::span<double> sims);

namespace serial {
void affine_rows(std::span<const double> x, std::size_t n, std::size_t d,
                 std::span<const double> w, double bias, std::span<double> y);
void weighted_column_sums(std::span<const double> x, std::size_t n, std::size_t d,
                          std::span<const double> r, std::span<double> g);
void nearest_centroid(std::span<const double> points, std::size_t n,
                      std::span<const double> centroids, std::size_t k, std::size_t d,
                      std::span<int> assignment, std::span<double> sims);
}  // namespace serial

}  // namespace delusim::kernels
