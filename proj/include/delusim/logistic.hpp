#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace delusim::optim {

struct LogisticFit {
  std::vector<double> weights;
  double bias = 0.0;
  int iterations_used = 0;
  bool converged = false;
};

// Full-batch gradient descent with backtracking line search on
//   mean cross-entropy + (l2_lambda/2) * ||w||^2   (bias unregularized).
// Deterministic; stops at gradient norm <= tol or max_iter.
LogisticFit fit_logistic(std::span<const double> x, std::size_t n, std::size_t d,
                         std::span<const int> labels, double l2_lambda, int max_iter = 3000,
                         double tol = 1e-6);

double sigmoid(double z);

// sigma(w.x + b) per row.
std::vector<double> predict_proba(std::span<const double> x, std::size_t n, std::size_t d,
                                  const LogisticFit& model);

}  // namespace delusim::optim
