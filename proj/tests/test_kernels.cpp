#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>
#include <vector>

#include "delusim/common.hpp"
#include "delusim/kernels.hpp"
#include "doctest.h"

using namespace delusim;

namespace {

std::vector<double> random_matrix(std::size_t n, std::size_t d, std::mt19937_64& rng) {
  std::vector<double> m(n * d);
  for (auto& v : m) v = next_gaussian(rng);
  return m;
}

void unit_rows(std::vector<double>& m, std::size_t n, std::size_t d) {
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < d; ++j) s += m[i * d + j] * m[i * d + j];
    s = std::sqrt(s);
    for (std::size_t j = 0; j < d; ++j) m[i * d + j] /= s;
  }
}

}  // namespace

TEST_CASE("affine_rows: parallel bitwise identical to serial") {
  std::mt19937_64 rng(11);
  for (auto [n, d] : {std::pair<std::size_t, std::size_t>{1, 1}, {7, 3}, {128, 64}, {501, 17}}) {
    auto x = random_matrix(n, d, rng);
    auto w = random_matrix(1, d, rng);
    double bias = next_gaussian(rng);
    std::vector<double> y_par(n), y_ser(n);
    kernels::affine_rows(x, n, d, w, bias, y_par);
    kernels::serial::affine_rows(x, n, d, w, bias, y_ser);
    CHECK(y_par == y_ser);
  }
}

TEST_CASE("affine_rows: hand-computed small case") {
  std::vector<double> x = {1, 2, 3, 4};  // 2x2
  std::vector<double> w = {0.5, -1};
  std::vector<double> y(2);
  kernels::affine_rows(x, 2, 2, w, 0.25, y);
  CHECK(y[0] == doctest::Approx(1 * 0.5 - 2 + 0.25));
  CHECK(y[1] == doctest::Approx(3 * 0.5 - 4 + 0.25));
}

TEST_CASE("weighted_column_sums: parallel bitwise identical to serial") {
  std::mt19937_64 rng(12);
  for (auto [n, d] : {std::pair<std::size_t, std::size_t>{3, 5}, {200, 40}, {1000, 7}}) {
    auto x = random_matrix(n, d, rng);
    auto r = random_matrix(n, 1, rng);
    std::vector<double> g_par(d), g_ser(d);
    kernels::weighted_column_sums(x, n, d, r, g_par);
    kernels::serial::weighted_column_sums(x, n, d, r, g_ser);
    CHECK(g_par == g_ser);
  }
}

TEST_CASE("weighted_column_sums: hand-computed small case") {
  std::vector<double> x = {1, 0, 0, 1, 1, 1};  // 3x2
  std::vector<double> r = {2, 3, 4};
  std::vector<double> g(2);
  kernels::weighted_column_sums(x, 3, 2, r, g);
  CHECK(g[0] == doctest::Approx(2 + 0 + 4));
  CHECK(g[1] == doctest::Approx(0 + 3 + 4));
}

TEST_CASE("nearest_centroid: parallel bitwise identical to serial") {
  std::mt19937_64 rng(13);
  std::size_t n = 300, k = 9, d = 24;
  auto pts = random_matrix(n, d, rng);
  auto cents = random_matrix(k, d, rng);
  unit_rows(pts, n, d);
  unit_rows(cents, k, d);
  std::vector<int> a_par(n), a_ser(n);
  std::vector<double> s_par(n), s_ser(n);
  kernels::nearest_centroid(pts, n, cents, k, d, a_par, s_par);
  kernels::serial::nearest_centroid(pts, n, cents, k, d, a_ser, s_ser);
  CHECK(a_par == a_ser);
  CHECK(s_par == s_ser);
}

TEST_CASE("nearest_centroid: ties go to the lower centroid index") {
  std::vector<double> pts = {1, 0};
  std::vector<double> cents = {0, 1, 0, 1};  // identical centroids
  std::vector<int> a(1);
  std::vector<double> s(1);
  kernels::nearest_centroid(pts, 1, cents, 2, 2, a, s);
  CHECK(a[0] == 0);
  CHECK(s[0] == doctest::Approx(0.0));
}
