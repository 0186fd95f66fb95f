#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>
#include <vector>

#include "delusim/common.hpp"
#include "delusim/stats.hpp"
#include "doctest.h"

using namespace delusim;

namespace {

double t_pdf(double x, double df) {
  double logc = std::lgamma((df + 1) / 2) - std::lgamma(df / 2) -
                0.5 * std::log(df * std::acos(-1.0));
  return std::exp(logc - (df + 1) / 2 * std::log1p(x * x / df));
}

// Two-sided p by Simpson quadrature of the t density over [|t|, inf),
// mapped to [0,1) with x = t0 + u/(1-u).
double t_two_sided_p_quadrature(double t, double df) {
  double t0 = std::abs(t);
  auto f = [&](double u) {
    double denom = 1.0 - u;
    double x = t0 + u / denom;
    return t_pdf(x, df) / (denom * denom);
  };
  int n = 200000;  // even
  double h = 1.0 / n, s = f(0.0);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(i * h);
  // f(1) -> 0 in the limit; the last panel uses the mapped integrand's decay.
  double tail = s * h / 3.0;
  return std::min(1.0, 2.0 * tail);
}

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng, double mu = 0, double sd = 1) {
  std::vector<double> v(n);
  for (auto& x : v) x = mu + sd * next_gaussian(rng);
  return v;
}

}  // namespace

TEST_CASE("ols_slope: exact cases") {
  std::vector<double> constant = {0.4, 0.4, 0.4, 0.4};
  CHECK(stats::ols_slope(constant) == doctest::Approx(0.0));
  std::vector<double> lin;
  for (int t = 0; t < 34; ++t) lin.push_back(0.3 + 0.02 * t);
  CHECK(stats::ols_slope(lin) == doctest::Approx(0.02).epsilon(1e-12));
  std::vector<double> one = {1.0};
  CHECK_THROWS_AS(stats::ols_slope(one), AnalysisError);
}

TEST_CASE("ols_slope: noisy fixture matches the closed-form recount") {
  std::mt19937_64 rng(31);
  std::vector<double> y;
  for (int t = 0; t < 50; ++t) y.push_back(0.5 + 0.013 * t + 0.05 * next_gaussian(rng));
  double n = 50, sx = 0, sy = 0, sxy = 0, sxx = 0;
  for (int t = 0; t < 50; ++t) {
    sx += t;
    sy += y[t];
    sxy += t * y[t];
    sxx += double(t) * t;
  }
  double expected = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  CHECK(stats::ols_slope(y) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("ols_slope_xy: sparse x positions") {
  std::vector<double> x = {0, 2, 5, 9};
  std::vector<double> y = {1, 5, 11, 19};  // y = 1 + 2x
  CHECK(stats::ols_slope_xy(x, y) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("lowess: reproduces linear input exactly") {
  std::vector<double> lin;
  for (int t = 0; t < 30; ++t) lin.push_back(0.2 + 0.01 * t);
  auto r = stats::lowess(lin, 0.3, 1);
  REQUIRE(r.smoothed.size() == lin.size());
  for (std::size_t i = 0; i < lin.size(); ++i)
    CHECK(r.smoothed[i] == doctest::Approx(lin[i]).epsilon(1e-9));
}

TEST_CASE("lowess: constant input stays constant") {
  std::vector<double> c(20, 0.7);
  auto r = stats::lowess(c, 0.3, 1);
  for (double v : r.smoothed) CHECK(v == doctest::Approx(0.7));
}

TEST_CASE("lowess: robust pass pulls an outlier toward its neighbors") {
  std::vector<double> v(21, 0.5);
  v[10] = 5.0;
  auto r = stats::lowess(v, 0.3, 1);
  CHECK(std::abs(r.smoothed[10] - 0.5) < std::abs(v[10] - 0.5) * 0.5);
}

TEST_CASE("lowess: monotone linear input stays monotone") {
  std::vector<double> lin;
  for (int t = 0; t < 34; ++t) lin.push_back(0.1 + 0.02 * t);
  auto r = stats::lowess(lin, 0.4, 1);
  for (std::size_t i = 1; i < r.smoothed.size(); ++i) CHECK(r.smoothed[i] >= r.smoothed[i - 1] - 1e-12);
}

TEST_CASE("cohens_d: hand-computed example and antisymmetry") {
  std::vector<double> a = {2, 4}, b = {0, 2};
  CHECK(stats::cohens_d(a, b) == doctest::Approx(2.0 / std::sqrt(2.0)));
  CHECK(stats::cohens_d(b, a) == doctest::Approx(-2.0 / std::sqrt(2.0)));
  CHECK(stats::cohens_d(a, a) == doctest::Approx(0.0));
  std::vector<double> z1 = {1, 1}, z2 = {1, 1};
  CHECK_THROWS_AS(stats::cohens_d(z1, z2), AnalysisError);
}

TEST_CASE("welch_t: degenerate and separated cases") {
  std::vector<double> a = {1, 2, 3, 4}, same = {1, 2, 3, 4};
  auto r = stats::welch_t(a, same);
  CHECK(r.t_statistic == doctest::Approx(0.0));
  CHECK(r.p_value == doctest::Approx(1.0));

  std::vector<double> b;
  for (double v : a) b.push_back(v + 10 + 1e-4 * v);
  auto sep = stats::welch_t(b, a);
  CHECK(sep.p_value < 1e-4);
  CHECK(sep.t_statistic > 0);
}

TEST_CASE("welch_t: statistic, df, and p match independent recomputation") {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 25; ++trial) {
    auto a = random_vec(30, rng, 0.2 * trial, 1.0 + 0.1 * trial);
    auto b = random_vec(24, rng, 0.0, 1.5);
    auto r = stats::welch_t(a, b);

    double ma = stats::mean(a), mb = stats::mean(b);
    double va = stats::sample_variance(a), vb = stats::sample_variance(b);
    double na = a.size(), nb = b.size();
    double se2 = va / na + vb / nb;
    double t = (ma - mb) / std::sqrt(se2);
    double df = se2 * se2 / (va * va / (na * na * (na - 1)) + vb * vb / (nb * nb * (nb - 1)));
    CHECK(r.t_statistic == doctest::Approx(t).epsilon(1e-9));
    CHECK(r.degrees_of_freedom == doctest::Approx(df).epsilon(1e-9));
    CHECK(r.p_value == doctest::Approx(t_two_sided_p_quadrature(t, df)).epsilon(2e-6));
  }
}

TEST_CASE("paired_t: matches recomputation and quadrature p") {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 20; ++trial) {
    auto d = random_vec(20 + trial, rng, 0.1, 0.8);
    auto r = stats::paired_t(d);
    double m = stats::mean(d), sd = std::sqrt(stats::sample_variance(d));
    double t = m / (sd / std::sqrt(double(d.size())));
    CHECK(r.t_statistic == doctest::Approx(t).epsilon(1e-9));
    CHECK(r.degrees_of_freedom == doctest::Approx(double(d.size() - 1)));
    CHECK(r.p_value == doctest::Approx(t_two_sided_p_quadrature(t, d.size() - 1)).epsilon(2e-6));
    CHECK(r.test_kind == stats::TestKind::Paired);
  }
}

TEST_CASE("t_two_sided_p: broad grid against quadrature") {
  for (double df : {1.0, 2.0, 5.0, 10.5, 30.0, 120.0}) {
    for (double t : {0.0, 0.5, 1.0, 2.0, 3.5, 6.0}) {
      CHECK(stats::t_two_sided_p(t, df) ==
            doctest::Approx(t_two_sided_p_quadrature(t, df)).epsilon(2e-6));
      CHECK(stats::t_two_sided_p(-t, df) == doctest::Approx(stats::t_two_sided_p(t, df)));
    }
  }
}

TEST_CASE("incomplete_beta: closed-form special cases") {
  // I_x(1,1) = x, I_x(1,b) = 1-(1-x)^b, symmetry I_x(a,b) = 1 - I_{1-x}(b,a).
  for (double x : {0.1, 0.5, 0.9}) {
    CHECK(stats::incomplete_beta(1, 1, x) == doctest::Approx(x).epsilon(1e-12));
    CHECK(stats::incomplete_beta(1, 3, x) ==
          doctest::Approx(1 - std::pow(1 - x, 3.0)).epsilon(1e-10));
    CHECK(stats::incomplete_beta(2.5, 4.5, x) ==
          doctest::Approx(1 - stats::incomplete_beta(4.5, 2.5, 1 - x)).epsilon(1e-10));
  }
  CHECK(stats::incomplete_beta(2, 3, 0.0) == doctest::Approx(0.0));
  CHECK(stats::incomplete_beta(2, 3, 1.0) == doctest::Approx(1.0));
}

TEST_CASE("pearson: exact and recount cases") {
  std::vector<double> x = {1, 2, 3, 4};
  std::vector<double> y, ny;
  for (double v : x) {
    y.push_back(2 * v + 1);
    ny.push_back(-v);
  }
  CHECK(stats::pearson(x, y) == doctest::Approx(1.0));
  CHECK(stats::pearson(x, ny) == doctest::Approx(-1.0));

  std::mt19937_64 rng(34);
  auto u = random_vec(40, rng), v = random_vec(40, rng);
  double mu = stats::mean(u), mv = stats::mean(v);
  double num = 0, du = 0, dv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    num += (u[i] - mu) * (v[i] - mv);
    du += (u[i] - mu) * (u[i] - mu);
    dv += (v[i] - mv) * (v[i] - mv);
  }
  CHECK(stats::pearson(u, v) == doctest::Approx(num / std::sqrt(du * dv)).epsilon(1e-12));

  std::vector<double> constant = {1, 1, 1};
  CHECK_THROWS_AS(stats::pearson(constant, x), AnalysisError);
}

TEST_CASE("scale equivariance of slope; d and r scale invariant") {
  std::mt19937_64 rng(35);
  auto a = random_vec(25, rng, 0.5, 0.2);
  auto b = random_vec(25, rng, 0.3, 0.2);
  double slope = stats::ols_slope(a);
  double d = stats::cohens_d(a, b);
  double r = stats::pearson(a, b);
  std::vector<double> a3, b3;
  for (double v : a) a3.push_back(3 * v);
  for (double v : b) b3.push_back(3 * v);
  CHECK(stats::ols_slope(a3) == doctest::Approx(3 * slope).epsilon(1e-12));
  CHECK(stats::cohens_d(a3, b3) == doctest::Approx(d).epsilon(1e-12));
  CHECK(stats::pearson(a3, b3) == doctest::Approx(r).epsilon(1e-12));
}
