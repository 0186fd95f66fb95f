#include "delusim/logistic.hpp"

#include <algorithm>
#include <cmath>

#include "delusim/common.hpp"
#include "delusim/kernels.hpp"

namespace delusim::optim {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

namespace {

// Numerically stable mean cross-entropy from logits.
double loss_at(std::span<const double> logits, std::span<const int> labels, double l2_lambda,
               std::span<const double> w) {
  double ce = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    double z = logits[i];
    // log(1+exp(z)) - y*z, stable form
    double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    ce += softplus - labels[i] * z;
  }
  ce /= static_cast<double>(logits.size());
  double reg = 0.0;
  for (double wi : w) reg += wi * wi;
  return ce + 0.5 * l2_lambda * reg;
}

}  // namespace

LogisticFit fit_logistic(std::span<const double> x, std::size_t n, std::size_t d,
                         std::span<const int> labels, double l2_lambda, int max_iter,
                         double tol) {
  bool has0 = false, has1 = false;
  for (int y : labels) (y ? has1 : has0) = true;
  if (!has0 || !has1) throw AnalysisError("logistic fit requires both classes present");

  LogisticFit fit;
  fit.weights.assign(d, 0.0);
  // Start the (unregularized) bias at the log-odds of the class prior; with
  // zero weights this is the exact optimum of the intercept-only model, which
  // speeds convergence and keeps the large-lambda limit at the prior.
  double prior = 0.0;
  for (int y : labels) prior += y;
  prior = std::clamp(prior / static_cast<double>(n), 1e-9, 1.0 - 1e-9);
  fit.bias = std::log(prior / (1.0 - prior));
  std::vector<double> logits(n), residual(n), grad_w(d);
  double grad_b = 0.0;
  double step = 1.0;
  const double inv_n = 1.0 / static_cast<double>(n);

  auto compute = [&](std::span<const double> w, double b, std::span<double> out_logits) {
    kernels::affine_rows(x, n, d, w, b, out_logits);
  };

  compute(fit.weights, fit.bias, logits);
  double loss = loss_at(logits, labels, l2_lambda, fit.weights);

  for (int iter = 0; iter < max_iter; ++iter) {
    for (std::size_t i = 0; i < n; ++i) residual[i] = (sigmoid(logits[i]) - labels[i]) * inv_n;
    kernels::weighted_column_sums(x, n, d, residual, grad_w);
    for (std::size_t j = 0; j < d; ++j) grad_w[j] += l2_lambda * fit.weights[j];
    grad_b = 0.0;
    for (double r : residual) grad_b += r;

    double gnorm2 = grad_b * grad_b;
    for (double g : grad_w) gnorm2 += g * g;
    fit.iterations_used = iter;
    if (std::sqrt(gnorm2) <= tol) {
      fit.converged = true;
      return fit;
    }

    // Backtracking line search (Armijo), step carried across iterations.
    std::vector<double> trial_w(d);
    std::vector<double> trial_logits(n);
    double trial_b, trial_loss;
    step = std::min(step * 2.0, 1e4);
    for (;;) {
      for (std::size_t j = 0; j < d; ++j) trial_w[j] = fit.weights[j] - step * grad_w[j];
      trial_b = fit.bias - step * grad_b;
      compute(trial_w, trial_b, trial_logits);
      trial_loss = loss_at(trial_logits, labels, l2_lambda, trial_w);
      if (trial_loss <= loss - 1e-4 * step * gnorm2 || step < 1e-16) break;
      step *= 0.5;
    }
    fit.weights = std::move(trial_w);
    fit.bias = trial_b;
    logits = std::move(trial_logits);
    loss = trial_loss;
  }
  fit.iterations_used = max_iter;
  fit.converged = false;
  return fit;
}

std::vector<double> predict_proba(std::span<const double> x, std::size_t n, std::size_t d,
                                  const LogisticFit& model) {
  std::vector<double> logits(n);
  kernels::affine_rows(x, n, d, model.weights, model.bias, logits);
  for (double& z : logits) z = sigmoid(z);
  return logits;
}

}  // namespace delusim::optim
