#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <vector>

#include "delusim/logistic.hpp"

namespace delusim::matching {

// Sentinel stored when group variances are zero but means differ.
constexpr double kSmdDivergedSentinel = 1e6;
// Adequacy threshold the balance report is judged against.
constexpr double kSmdThreshold = 0.25;

struct Standardized {
  std::vector<double> z;  // row-major, same shape as input
  std::vector<double> mean;
  std::vector<double> sd;                 // sample sd; 1.0 recorded for flagged columns
  std::vector<std::size_t> zero_variance;  // flagged column indices (mapped to zeros)
};

Standardized standardize(std::span<const double> x, std::size_t n, std::size_t d);

struct PropensityModel {
  optim::LogisticFit fit;
  double l2_lambda = 0.0;
};

PropensityModel fit_propensity(std::span<const double> z, std::size_t n, std::size_t d,
                               std::span<const int> labels, double l2_lambda,
                               int max_iter = 3000, double tol = 1e-6);

struct Stratification {
  int k = 0;
  std::vector<double> boundaries;  // k-1 ascending cut points (i/k quantiles)
  std::vector<int> assignment;     // per user, stratum in [0,k)
  std::set<int> pruned;
};

// Quantile stratification; boundary-equal scores go to the lower stratum.
Stratification stratify(std::span<const double> scores, int k);

// |mean_t - mean_c| / sqrt((var_t + var_c)/2), sample variances.
double smd(std::span<const double> treat_values, std::span<const double> control_values);

struct BalanceReport {
  int k = 0;
  std::vector<double> per_covariate_smd_before;
  std::vector<double> per_covariate_smd_after;  // within-stratum, stratum-size weighted
  double mean_abs_smd_before = 0.0;
  double mean_abs_smd_after = 0.0;
  bool passes_threshold() const { return mean_abs_smd_after < kSmdThreshold; }
};

struct SweepResult {
  int best_k = 0;
  std::vector<double> scores;  // propensity per user
  std::map<int, BalanceReport> reports;
  std::map<int, Stratification> stratifications;
};

SweepResult sweep_and_select(std::span<const double> x, std::size_t n, std::size_t d,
                             std::span<const int> labels, int k_min = 3, int k_max = 10,
                             double l2_lambda = 1.0, int max_iter = 3000, double tol = 1e-6);

Stratification prune_strata(const Stratification& strat, std::span<const int> labels,
                            int min_per_group = 10);

}  // namespace delusim::matching
