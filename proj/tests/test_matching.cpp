#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <map>
#include <random>
#include <vector>

#include "delusim/common.hpp"
#include "delusim/matching.hpp"
#include "doctest.h"

using namespace delusim;

TEST_CASE("standardize: hand-computed column") {
  std::vector<double> x = {1, 2, 3};
  auto s = matching::standardize(x, 3, 1);
  CHECK(s.z[0] == doctest::Approx(-1.0));
  CHECK(s.z[1] == doctest::Approx(0.0));
  CHECK(s.z[2] == doctest::Approx(1.0));
  CHECK(s.mean[0] == doctest::Approx(2.0));
  CHECK(s.sd[0] == doctest::Approx(1.0));
  CHECK(s.zero_variance.empty());
}

TEST_CASE("standardize: constant column flagged and zeroed") {
  std::vector<double> x = {5, 5, 5, 5};
  auto s = matching::standardize(x, 4, 1);
  CHECK(s.z == std::vector<double>{0, 0, 0, 0});
  REQUIRE(s.zero_variance.size() == 1);
  CHECK(s.zero_variance[0] == 0);
}

TEST_CASE("standardize: idempotent on standardized data") {
  std::vector<double> x = {-1, 0, 1};
  auto s = matching::standardize(x, 3, 1);
  for (int i = 0; i < 3; ++i) CHECK(s.z[i] == doctest::Approx(x[i]).epsilon(1e-12));
}

TEST_CASE("stratify: decile scores with k=5 give strata of two") {
  std::vector<double> scores = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  auto s = matching::stratify(scores, 5);
  std::map<int, int> sizes;
  for (int a : s.assignment) ++sizes[a];
  REQUIRE(sizes.size() == 5);
  for (auto [stratum, count] : sizes) CHECK(count == 2);
  CHECK(s.assignment[0] == 0);
  CHECK(s.assignment[9] == 4);
}

TEST_CASE("stratify: one user per stratum at k = n") {
  std::vector<double> scores = {0.2, 0.5, 0.8};
  auto s = matching::stratify(scores, 3);
  std::vector<int> sorted = s.assignment;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<int>{0, 1, 2});
}

TEST_CASE("stratify: every stratum nonempty on random scores") {
  std::mt19937_64 rng(3);
  std::vector<double> scores(200);
  for (auto& v : scores) v = next_unit(rng);
  for (int k = 3; k <= 10; ++k) {
    auto s = matching::stratify(scores, k);
    std::map<int, int> sizes;
    for (int a : s.assignment) ++sizes[a];
    CHECK(static_cast<int>(sizes.size()) == k);
  }
}

TEST_CASE("stratify: fewer than k distinct scores is an error") {
  std::vector<double> scores = {0.5, 0.5, 0.5, 0.7};
  CHECK_THROWS_AS(matching::stratify(scores, 3), AnalysisError);
}

TEST_CASE("smd: hand-computed and invariances") {
  std::vector<double> t = {1, 2, 3}, c = {2, 3, 4};
  CHECK(matching::smd(t, c) == doctest::Approx(1.0));
  CHECK(matching::smd(t, t) == doctest::Approx(0.0));

  std::vector<double> t10, c10;
  for (double v : t) t10.push_back(10 * v);
  for (double v : c) c10.push_back(10 * v);
  CHECK(matching::smd(t10, c10) == doctest::Approx(1.0));

  // Common shift leaves SMD unchanged.
  std::vector<double> ts, cs;
  for (double v : t) ts.push_back(v + 100);
  for (double v : c) cs.push_back(v + 100);
  CHECK(matching::smd(ts, cs) == doctest::Approx(1.0));
}

TEST_CASE("smd: degenerate variance hits the sentinel; tiny groups error") {
  std::vector<double> a = {1, 1}, b = {2, 2};
  CHECK(matching::smd(a, b) == matching::kSmdDivergedSentinel);
  CHECK(matching::smd(a, a) == doctest::Approx(0.0));
  std::vector<double> one = {1.0};
  CHECK_THROWS_AS(matching::smd(one, b), AnalysisError);
}

namespace {

// Confounded generator: covariate 0 drives treatment assignment.
struct SyntheticCohort {
  std::vector<double> x;
  std::vector<int> labels;
  std::size_t n, d;
};

SyntheticCohort make_confounded(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  SyntheticCohort s;
  s.n = n;
  s.d = d;
  s.x.resize(n * d);
  s.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double conf = next_gaussian(rng);
    s.labels[i] = next_unit(rng) < 1.0 / (1.0 + std::exp(-2.0 * conf)) ? 1 : 0;
    s.x[i * d + 0] = conf + 0.2 * next_gaussian(rng);
    for (std::size_t j = 1; j < d; ++j) s.x[i * d + j] = next_gaussian(rng);
  }
  return s;
}

}  // namespace

TEST_CASE("sweep_and_select: balance improves on confounded data for every k") {
  auto s = make_confounded(800, 5, 21);
  auto sweep = matching::sweep_and_select(s.x, s.n, s.d, s.labels, 3, 8, 1.0);
  for (const auto& [k, rep] : sweep.reports) {
    CHECK(rep.mean_abs_smd_after < rep.mean_abs_smd_before);
    CHECK(rep.per_covariate_smd_after.size() == s.d);
  }
  // best_k attains the minimum mean SMD after.
  double best = sweep.reports.at(sweep.best_k).mean_abs_smd_after;
  for (const auto& [k, rep] : sweep.reports) CHECK(best <= rep.mean_abs_smd_after + 1e-15);
}

TEST_CASE("sweep_and_select: argmin selection is invariant to covariate permutation") {
  auto s = make_confounded(400, 4, 22);
  auto sweep1 = matching::sweep_and_select(s.x, s.n, s.d, s.labels, 3, 6, 1.0);
  // Permute columns: reverse order.
  std::vector<double> xp(s.x.size());
  for (std::size_t i = 0; i < s.n; ++i)
    for (std::size_t j = 0; j < s.d; ++j) xp[i * s.d + j] = s.x[i * s.d + (s.d - 1 - j)];
  auto sweep2 = matching::sweep_and_select(xp, s.n, s.d, s.labels, 3, 6, 1.0);
  CHECK(sweep1.best_k == sweep2.best_k);
  for (const auto& [k, rep] : sweep1.reports)
    CHECK(rep.mean_abs_smd_after ==
          doctest::Approx(sweep2.reports.at(k).mean_abs_smd_after).epsilon(1e-9));
}

TEST_CASE("sweep_and_select: constant covariate contributes zero") {
  auto s = make_confounded(300, 3, 23);
  for (std::size_t i = 0; i < s.n; ++i) s.x[i * s.d + 2] = 4.2;
  auto sweep = matching::sweep_and_select(s.x, s.n, s.d, s.labels, 3, 4, 1.0);
  for (const auto& [k, rep] : sweep.reports) {
    CHECK(rep.per_covariate_smd_before[2] == doctest::Approx(0.0));
    CHECK(rep.per_covariate_smd_after[2] == doctest::Approx(0.0));
  }
}

TEST_CASE("propensity scores lie strictly inside (0,1)") {
  auto s = make_confounded(200, 3, 24);
  auto sweep = matching::sweep_and_select(s.x, s.n, s.d, s.labels, 3, 4, 1.0);
  for (double p : sweep.scores) {
    CHECK(p > 0.0);
    CHECK(p < 1.0);
  }
}

TEST_CASE("prune_strata: paper-motivated boundary cases") {
  matching::Stratification strat;
  strat.k = 3;
  // Stratum 0: 12t/12c, stratum 1: 12t/8c, stratum 2: 12t/12c.
  std::vector<int> labels;
  for (int st = 0; st < 3; ++st) {
    int controls = st == 1 ? 8 : 12;
    for (int i = 0; i < 12; ++i) {
      strat.assignment.push_back(st);
      labels.push_back(1);
    }
    for (int i = 0; i < controls; ++i) {
      strat.assignment.push_back(st);
      labels.push_back(0);
    }
  }
  auto pruned = matching::prune_strata(strat, labels, 10);
  CHECK(pruned.pruned == std::set<int>{1});

  auto none = matching::prune_strata(strat, labels, 1);
  CHECK(none.pruned.empty());

  auto all_ok = matching::prune_strata(strat, labels, 8);
  CHECK(all_ok.pruned.empty());

  CHECK_THROWS_AS(matching::prune_strata(strat, labels, 100), AnalysisError);
}
