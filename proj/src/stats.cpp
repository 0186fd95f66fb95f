#include "delusim/stats.hpp"

#include <algorithm>
#include <cmath>

#include "delusim/common.hpp"

namespace delusim::stats {

double mean(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m += x;
  return m / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v) {
  double m = mean(v);
  double var = 0.0;
  for (double x : v) var += (x - m) * (x - m);
  return var / static_cast<double>(v.size() - 1);
}

double ols_slope_xy(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw AnalysisError("slope requires >=2 equal-length points");
  double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw AnalysisError("slope undefined for constant x");
  return sxy / sxx;
}

double ols_slope(std::span<const double> series) {
  std::vector<double> idx(series.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<double>(i);
  return ols_slope_xy(idx, series);
}

namespace {

// Weighted linear fit evaluated at x0; falls back to weighted mean when the
// design is degenerate.
double weighted_local_fit(std::span<const double> xs, std::span<const double> ys,
                          std::span<const double> ws, double x0, bool& degenerate) {
  double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sw += ws[i];
    swx += ws[i] * xs[i];
    swy += ws[i] * ys[i];
    swxx += ws[i] * xs[i] * xs[i];
    swxy += ws[i] * xs[i] * ys[i];
  }
  double det = sw * swxx - swx * swx;
  if (sw == 0.0) {
    degenerate = true;
    double acc = 0.0;
    for (double y : ys) acc += y;
    return acc / static_cast<double>(ys.size());
  }
  if (std::fabs(det) < 1e-12 * std::max(1.0, sw * swxx)) {
    degenerate = true;
    return swy / sw;
  }
  double b = (sw * swxy - swx * swy) / det;
  double a = (swy - b * swx) / sw;
  return a + b * x0;
}

}  // namespace

LowessResult lowess(std::span<const double> series, double frac, int robust_iters) {
  std::size_t n = series.size();
  if (n < 3) throw AnalysisError("lowess requires at least 3 points");
  std::size_t window = static_cast<std::size_t>(std::ceil(frac * static_cast<double>(n)));
  if (window < 2) throw AnalysisError("lowess window too small: frac*n < 2");
  window = std::min(window, n);

  LowessResult result;
  result.smoothed.resize(n);
  std::vector<double> robust(n, 1.0);

  for (int pass = 0; pass <= robust_iters; ++pass) {
    for (std::size_t i = 0; i < n; ++i) {
      // nearest `window` indices around i
      std::size_t lo = i >= window ? i - window : 0;
      std::size_t hi = std::min(n - 1, i + window);
      std::vector<std::pair<double, std::size_t>> dists;
      for (std::size_t j = lo; j <= hi; ++j)
        dists.emplace_back(std::fabs(static_cast<double>(j) - static_cast<double>(i)), j);
      std::sort(dists.begin(), dists.end());
      dists.resize(window);
      double dmax = dists.back().first;

      std::vector<double> xs, ys, ws;
      for (auto [d, j] : dists) {
        double w;
        if (dmax == 0.0) {
          w = 1.0;
          result.degenerate_window = true;
        } else {
          double u = d / dmax;
          u = std::min(u, 1.0);
          w = std::pow(1.0 - u * u * u, 3.0);
        }
        xs.push_back(static_cast<double>(j));
        ys.push_back(series[j]);
        ws.push_back(w * robust[j]);
      }
      result.smoothed[i] =
          weighted_local_fit(xs, ys, ws, static_cast<double>(i), result.degenerate_window);
    }
    if (pass == robust_iters) break;

    // bisquare robustness weights from residuals
    std::vector<double> abs_res(n);
    for (std::size_t i = 0; i < n; ++i) abs_res[i] = std::fabs(series[i] - result.smoothed[i]);
    std::vector<double> sorted = abs_res;
    std::sort(sorted.begin(), sorted.end());
    double med = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    double cutoff = 6.0 * med;
    for (std::size_t i = 0; i < n; ++i) {
      if (cutoff <= 0.0) {
        robust[i] = 1.0;
      } else {
        double u = abs_res[i] / cutoff;
        robust[i] = u >= 1.0 ? 0.0 : (1.0 - u * u) * (1.0 - u * u);
      }
    }
  }
  return result;
}

double cohens_d(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw AnalysisError("cohens_d requires >=2 per group");
  double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  double pooled =
      std::sqrt(((na - 1) * sample_variance(a) + (nb - 1) * sample_variance(b)) / (na + nb - 2));
  if (pooled == 0.0) throw AnalysisError("cohens_d undefined: zero pooled sd");
  return (mean(a) - mean(b)) / pooled;
}

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  // symmetry for faster convergence
  if (x > (a + 1.0) / (a + b + 2.0)) return 1.0 - incomplete_beta(b, a, 1.0 - x);

  double log_front = a * std::log(x) + b * std::log(1.0 - x) -
                     (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
  // modified Lentz continued fraction
  const double tiny = 1e-300;
  double c = 1.0, d = 1.0 - (a + b) * x / (a + 1.0);
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 500; ++m) {
    double dm = static_cast<double>(m);
    double num = dm * (b - dm) * x / ((a + 2 * dm - 1) * (a + 2 * dm));
    d = 1.0 + num * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + num / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    num = -(a + dm) * (a + b + dm) * x / ((a + 2 * dm) * (a + 2 * dm + 1));
    d = 1.0 + num * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + num / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-14) break;
  }
  return std::exp(log_front) * h / a;
}

double t_two_sided_p(double t, double df) {
  double x = df / (df + t * t);
  double p = incomplete_beta(df / 2.0, 0.5, x);
  return std::min(1.0, std::max(0.0, p));
}

EffectReport welch_t(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw AnalysisError("welch_t requires >=2 per group");
  double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  double va = sample_variance(a), vb = sample_variance(b);
  double se2 = va / na + vb / nb;
  if (se2 == 0.0) throw AnalysisError("welch_t undefined: zero variance in both groups");
  EffectReport rep;
  rep.test_kind = TestKind::Welch;
  rep.t_statistic = (mean(a) - mean(b)) / std::sqrt(se2);
  rep.degrees_of_freedom =
      se2 * se2 / ((va / na) * (va / na) / (na - 1) + (vb / nb) * (vb / nb) / (nb - 1));
  rep.p_value = t_two_sided_p(rep.t_statistic, rep.degrees_of_freedom);
  rep.cohens_d = cohens_d(a, b);
  return rep;
}

EffectReport paired_t(std::span<const double> diffs) {
  if (diffs.size() < 2) throw AnalysisError("paired_t requires >=2 diffs");
  double n = static_cast<double>(diffs.size());
  double sd = std::sqrt(sample_variance(diffs));
  if (sd == 0.0) throw AnalysisError("paired_t undefined: zero variance of diffs");
  EffectReport rep;
  rep.test_kind = TestKind::Paired;
  rep.t_statistic = mean(diffs) / (sd / std::sqrt(n));
  rep.degrees_of_freedom = n - 1;
  rep.p_value = t_two_sided_p(rep.t_statistic, rep.degrees_of_freedom);
  rep.cohens_d = mean(diffs) / sd;
  return rep;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw AnalysisError("pearson requires equal-length inputs of size >=2");
  double mx = mean(x), my = mean(y);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw AnalysisError("pearson undefined for constant input");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace delusim::stats
