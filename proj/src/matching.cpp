#include "delusim/matching.hpp"

#include <algorithm>
#include <cmath>

#include "delusim/common.hpp"

namespace delusim::matching {

namespace {

struct MeanVar {
  double mean = 0.0;
  double var = 0.0;  // sample variance
  std::size_t n = 0;
};

MeanVar mean_var(std::span<const double> v) {
  MeanVar mv;
  mv.n = v.size();
  for (double x : v) mv.mean += x;
  mv.mean /= static_cast<double>(mv.n);
  if (mv.n > 1) {
    for (double x : v) mv.var += (x - mv.mean) * (x - mv.mean);
    mv.var /= static_cast<double>(mv.n - 1);
  }
  return mv;
}

double smd_from(const MeanVar& t, const MeanVar& c) {
  double denom = std::sqrt((t.var + c.var) / 2.0);
  double diff = std::fabs(t.mean - c.mean);
  // An effectively constant covariate: summation rounding can leave the two
  // group means a few ulps apart with vanishing variances, which would blow
  // the ratio up to O(1). Treat relatively-equal means as balanced.
  double scale = std::max({1.0, std::fabs(t.mean), std::fabs(c.mean)});
  if (diff <= 1e-12 * scale) return 0.0;
  if (denom == 0.0) return kSmdDivergedSentinel;
  return diff / denom;
}

}  // namespace

Standardized standardize(std::span<const double> x, std::size_t n, std::size_t d) {
  if (n < 2) throw AnalysisError("standardize requires at least 2 rows");
  Standardized out;
  out.z.assign(n * d, 0.0);
  out.mean.assign(d, 0.0);
  out.sd.assign(d, 1.0);
  for (std::size_t j = 0; j < d; ++j) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m += x[i * d + j];
    m /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double dx = x[i * d + j] - m;
      var += dx * dx;
    }
    var /= static_cast<double>(n - 1);
    out.mean[j] = m;
    if (var == 0.0) {
      out.zero_variance.push_back(j);
      continue;  // column left as zeros
    }
    double sd = std::sqrt(var);
    out.sd[j] = sd;
    for (std::size_t i = 0; i < n; ++i) out.z[i * d + j] = (x[i * d + j] - m) / sd;
  }
  return out;
}

PropensityModel fit_propensity(std::span<const double> z, std::size_t n, std::size_t d,
                               std::span<const int> labels, double l2_lambda, int max_iter,
                               double tol) {
  PropensityModel m;
  m.l2_lambda = l2_lambda;
  m.fit = optim::fit_logistic(z, n, d, labels, l2_lambda, max_iter, tol);
  return m;
}

Stratification stratify(std::span<const double> scores, int k) {
  if (k < 3 || k > 10) throw AnalysisError("stratum count must be in [3,10]");
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  std::size_t distinct = 1;
  for (std::size_t i = 1; i < sorted.size(); ++i)
    if (sorted[i] != sorted[i - 1]) ++distinct;
  if (sorted.size() < static_cast<std::size_t>(k) || distinct < static_cast<std::size_t>(k))
    throw AnalysisError("fewer distinct propensity scores than strata");

  Stratification s;
  s.k = k;
  std::size_t n = sorted.size();
  for (int i = 1; i < k; ++i) {
    std::size_t pos =
        (static_cast<std::size_t>(i) * n + static_cast<std::size_t>(k) - 1) / k;  // ceil(i*n/k)
    s.boundaries.push_back(sorted[pos - 1]);
  }
  s.assignment.resize(n);
  std::vector<std::size_t> sizes(k, 0);
  for (std::size_t u = 0; u < n; ++u) {
    // boundary-equal scores fall to the lower stratum
    int idx = static_cast<int>(std::lower_bound(s.boundaries.begin(), s.boundaries.end(),
                                                scores[u]) -
                               s.boundaries.begin());
    s.assignment[u] = idx;
    ++sizes[idx];
  }
  for (int i = 0; i < k; ++i)
    if (sizes[i] == 0) throw AnalysisError("score ties produced an empty stratum");
  return s;
}

double smd(std::span<const double> treat_values, std::span<const double> control_values) {
  if (treat_values.size() < 2 || control_values.size() < 2)
    throw AnalysisError("smd requires at least 2 values per group");
  return smd_from(mean_var(treat_values), mean_var(control_values));
}

namespace {

BalanceReport balance_for_k(std::span<const double> x, std::size_t n, std::size_t d,
                            std::span<const int> labels, const Stratification& strat) {
  BalanceReport rep;
  rep.k = strat.k;
  rep.per_covariate_smd_before.resize(d);
  rep.per_covariate_smd_after.resize(d);

  std::vector<std::size_t> treat_idx, ctrl_idx;
  for (std::size_t i = 0; i < n; ++i) (labels[i] ? treat_idx : ctrl_idx).push_back(i);

  std::vector<std::vector<std::size_t>> strata_t(strat.k), strata_c(strat.k);
  for (std::size_t i = 0; i < n; ++i)
    (labels[i] ? strata_t : strata_c)[strat.assignment[i]].push_back(i);

  std::vector<double> tv, cv;
  for (std::size_t j = 0; j < d; ++j) {
    tv.clear();
    cv.clear();
    for (std::size_t i : treat_idx) tv.push_back(x[i * d + j]);
    for (std::size_t i : ctrl_idx) cv.push_back(x[i * d + j]);
    rep.per_covariate_smd_before[j] = smd_from(mean_var(tv), mean_var(cv));

    // Stratum-size-weighted within-stratum SMD; strata too thin for a
    // variance estimate in either group are skipped and weights renormalized.
    double weighted = 0.0, total_weight = 0.0;
    for (int st = 0; st < strat.k; ++st) {
      if (strata_t[st].size() < 2 || strata_c[st].size() < 2) continue;
      tv.clear();
      cv.clear();
      for (std::size_t i : strata_t[st]) tv.push_back(x[i * d + j]);
      for (std::size_t i : strata_c[st]) cv.push_back(x[i * d + j]);
      double w = static_cast<double>(strata_t[st].size() + strata_c[st].size());
      weighted += w * smd_from(mean_var(tv), mean_var(cv));
      total_weight += w;
    }
    rep.per_covariate_smd_after[j] = total_weight > 0.0 ? weighted / total_weight : 0.0;
  }

  for (std::size_t j = 0; j < d; ++j) {
    rep.mean_abs_smd_before += rep.per_covariate_smd_before[j];
    rep.mean_abs_smd_after += rep.per_covariate_smd_after[j];
  }
  rep.mean_abs_smd_before /= static_cast<double>(d);
  rep.mean_abs_smd_after /= static_cast<double>(d);
  return rep;
}

}  // namespace

SweepResult sweep_and_select(std::span<const double> x, std::size_t n, std::size_t d,
                             std::span<const int> labels, int k_min, int k_max,
                             double l2_lambda, int max_iter, double tol) {
  auto std_x = standardize(x, n, d);
  auto model = fit_propensity(std_x.z, n, d, labels, l2_lambda, max_iter, tol);

  SweepResult res;
  res.scores = optim::predict_proba(std_x.z, n, d, model.fit);
  double best = 0.0;
  for (int k = k_min; k <= k_max; ++k) {
    auto strat = stratify(res.scores, k);
    auto rep = balance_for_k(x, n, d, labels, strat);
    if (res.reports.empty() || rep.mean_abs_smd_after < best) {
      best = rep.mean_abs_smd_after;
      res.best_k = k;
    }
    res.reports.emplace(k, std::move(rep));
    res.stratifications.emplace(k, std::move(strat));
  }
  return res;
}

Stratification prune_strata(const Stratification& strat, std::span<const int> labels,
                            int min_per_group) {
  std::vector<int> treat_counts(strat.k, 0), ctrl_counts(strat.k, 0);
  for (std::size_t i = 0; i < strat.assignment.size(); ++i)
    ++(labels[i] ? treat_counts : ctrl_counts)[strat.assignment[i]];

  Stratification out = strat;
  out.pruned.clear();
  for (int st = 0; st < strat.k; ++st)
    if (treat_counts[st] < min_per_group || ctrl_counts[st] < min_per_group)
      out.pruned.insert(st);
  if (static_cast<int>(out.pruned.size()) == strat.k)
    throw AnalysisError("all strata pruned at min_per_group=" + std::to_string(min_per_group));
  return out;
}

}  // namespace delusim::matching
