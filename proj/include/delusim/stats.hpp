#pragma once

#include <span>
#include <vector>

namespace delusim::stats {

// Least-squares slope of value against 0-based index.
double ols_slope(std::span<const double> series);
// General form over explicit x values (used for sparse per-theme rounds).
double ols_slope_xy(std::span<const double> x, std::span<const double> y);

struct LowessResult {
  std::vector<double> smoothed;
  bool degenerate_window = false;  // fell back to window means somewhere
};

// Locally weighted linear regression with tricube kernel over the nearest
// ceil(frac*n) neighbors; robust_iters bisquare re-weighting passes.
LowessResult lowess(std::span<const double> series, double frac = 0.3, int robust_iters = 1);

double cohens_d(std::span<const double> a, std::span<const double> b);

enum class TestKind { Welch, Paired };

struct EffectReport {
  double cohens_d = 0.0;
  double t_statistic = 0.0;
  double degrees_of_freedom = 0.0;
  double p_value = 1.0;  // two-sided
  TestKind test_kind = TestKind::Welch;
};

EffectReport welch_t(std::span<const double> a, std::span<const double> b);
EffectReport paired_t(std::span<const double> diffs);

double pearson(std::span<const double> x, std::span<const double> y);

// Regularized incomplete beta I_x(a,b) via continued fraction (Lentz).
double incomplete_beta(double a, double b, double x);
// Two-sided p-value of Student's t with df degrees of freedom.
double t_two_sided_p(double t, double df);

double mean(std::span<const double> v);
double sample_variance(std::span<const double> v);

}  // namespace delusim::stats
