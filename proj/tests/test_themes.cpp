#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "delusim/common.hpp"
#include "delusim/embedding.hpp"
#include "delusim/themes.hpp"
#include "doctest.h"

using namespace delusim;

namespace {

features::EmbeddingProvider hashing_provider() {
  features::EmbeddingProviderConfig cfg;
  cfg.kind = features::ProviderKind::Hashing;
  cfg.dimension = 384;
  return features::EmbeddingProvider(cfg);
}

std::vector<std::vector<double>> embed_all(features::EmbeddingProvider& p,
                                           const std::vector<std::string>& texts) {
  return p.embed(texts);
}

// Three disjoint-vocabulary theme generators.
std::string themed_text(int theme, std::uint64_t salt) {
  static const std::vector<std::vector<std::string>> vocab = {
      {"planets", "orbits", "comets", "nebula", "gravity", "telescope"},
      {"violin", "sonata", "tempo", "chord", "melody", "orchestra"},
      {"pastry", "yeast", "oven", "flour", "glaze", "crumb"},
  };
  std::ostringstream out;
  std::uint64_t h = salt * 0x9e3779b97f4a7c15ull + 1;
  for (int i = 0; i < 10; ++i) {
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdull;
    h ^= h >> 29;
    if (i) out << ' ';
    out << vocab[theme][h % vocab[theme].size()];
  }
  return out.str();
}

}  // namespace

TEST_CASE("cluster_turns: k=1 centroid is the normalized mean") {
  auto p = hashing_provider();
  std::vector<std::string> texts = {"alpha beta", "gamma delta", "epsilon zeta"};
  auto emb = embed_all(p, texts);
  auto cl = themes::cluster_turns(emb, 1, 9);
  CHECK(cl.assignment == std::vector<int>{0, 0, 0});
  std::vector<double> mean(emb[0].size(), 0.0);
  for (const auto& v : emb)
    for (std::size_t j = 0; j < v.size(); ++j) mean[j] += v[j];
  features::l2_normalize(mean);
  for (std::size_t j = 0; j < mean.size(); ++j)
    CHECK(cl.centroids[j] == doctest::Approx(mean[j]).epsilon(1e-9));
}

TEST_CASE("cluster_turns: two separated blobs recovered with purity 1") {
  auto p = hashing_provider();
  std::vector<std::string> texts;
  std::vector<int> truth;
  for (int i = 0; i < 20; ++i) {
    texts.push_back(themed_text(0, 100 + i));
    truth.push_back(0);
    texts.push_back(themed_text(2, 200 + i));
    truth.push_back(1);
  }
  auto emb = embed_all(p, texts);
  auto cl = themes::cluster_turns(emb, 2, 5);

  // purity up to label permutation
  std::map<std::pair<int, int>, int> counts;
  for (std::size_t i = 0; i < truth.size(); ++i) ++counts[{truth[i], cl.assignment[i]}];
  int diag = counts[{0, 0}] + counts[{1, 1}];
  int anti = counts[{0, 1}] + counts[{1, 0}];
  CHECK(std::max(diag, anti) == 40);

  SUBCASE("same seed reproduces the assignment") {
    auto again = themes::cluster_turns(emb, 2, 5);
    CHECK(again.assignment == cl.assignment);
  }

  SUBCASE("unit-norm centroids, objective in range") {
    for (int c = 0; c < 2; ++c) {
      double n2 = 0;
      for (std::size_t j = 0; j < emb[0].size(); ++j) {
        double v = cl.centroids[c * emb[0].size() + j];
        n2 += v * v;
      }
      CHECK(std::sqrt(n2) == doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK(cl.objective > 0.5);
    CHECK(cl.objective <= 1.0 + 1e-12);
  }
}

TEST_CASE("cluster_turns: n < k is an error") {
  auto p = hashing_provider();
  auto emb = embed_all(p, {"one", "two"});
  CHECK_THROWS_AS(themes::cluster_turns(emb, 3, 1), AnalysisError);
}

TEST_CASE("ctfidf_keywords: hand-computed 3-class fixture") {
  // Class 0: "x x y" (3 tokens), class 1: "y z" (2), class 2: "w" (1).
  // Average class tokens A = 2; f: x=2, y=2, z=1, w=1.
  std::vector<std::string> texts = {"x x y", "y z", "w"};
  std::vector<int> assignment = {0, 1, 2};
  auto kw = themes::ctfidf_keywords(assignment, texts, 3, 10);
  REQUIRE(kw.size() == 3);

  auto weight_of = [&](int c, const std::string& term) {
    for (const auto& t : kw[c])
      if (t.term == term) return t.weight;
    return -1.0;
  };
  CHECK(weight_of(0, "x") == doctest::Approx(2.0 * std::log1p(2.0 / 2.0)).epsilon(1e-9));
  CHECK(weight_of(0, "y") == doctest::Approx(1.0 * std::log1p(2.0 / 2.0)).epsilon(1e-9));
  CHECK(weight_of(1, "y") == doctest::Approx(1.0 * std::log1p(2.0 / 2.0)).epsilon(1e-9));
  CHECK(weight_of(1, "z") == doctest::Approx(1.0 * std::log1p(2.0 / 1.0)).epsilon(1e-9));
  CHECK(weight_of(2, "w") == doctest::Approx(1.0 * std::log1p(2.0 / 1.0)).epsilon(1e-9));
  CHECK(kw[0][0].term == "x");  // highest weight first
  CHECK(kw[1][0].term == "z");  // idf beats the shared term
}

TEST_CASE("ctfidf_keywords: disjoint vocabularies stay in their class") {
  std::vector<std::string> texts, t0, t1;
  std::vector<int> assignment;
  for (int i = 0; i < 10; ++i) {
    texts.push_back(themed_text(0, 300 + i));
    assignment.push_back(0);
    texts.push_back(themed_text(1, 400 + i));
    assignment.push_back(1);
  }
  auto kw = themes::ctfidf_keywords(assignment, texts, 2, 5);
  std::set<std::string> v0 = {"planets", "orbits", "comets", "nebula", "gravity", "telescope"};
  std::set<std::string> v1 = {"violin", "sonata", "tempo", "chord", "melody", "orchestra"};
  for (const auto& t : kw[0]) CHECK(v0.count(t.term) == 1);
  for (const auto& t : kw[1]) CHECK(v1.count(t.term) == 1);
}

TEST_CASE("ctfidf_keywords: ubiquitous term weighs below an exclusive equal-count term") {
  // "common" appears once per class; "rare" once, only in class 0.
  std::vector<std::string> texts = {"common rare", "common filler", "common filler2"};
  std::vector<int> assignment = {0, 1, 2};
  auto kw = themes::ctfidf_keywords(assignment, texts, 3, 10);
  auto weight_of = [&](int c, const std::string& term) {
    for (const auto& t : kw[c])
      if (t.term == term) return t.weight;
    return -1.0;
  };
  CHECK(weight_of(0, "rare") > weight_of(0, "common"));
}

TEST_CASE("ctfidf_keywords: empty theme is an error") {
  std::vector<std::string> texts = {"a b"};
  std::vector<int> assignment = {0};
  CHECK_THROWS_AS(themes::ctfidf_keywords(assignment, texts, 2, 5), AnalysisError);
}

TEST_CASE("coherence_cv: perfect co-occurrence reaches 1") {
  std::vector<std::string> docs = {"a b filler", "b a other", "a b again"};
  auto d = themes::coherence_cv({{"a", "b"}}, docs, 110);
  CHECK(d.score == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(!d.missing_keyword);
}

TEST_CASE("coherence_cv: never co-occurring keywords score near zero") {
  std::vector<std::string> docs = {"a x", "a y", "b z", "b w"};
  auto d = themes::coherence_cv({{"a", "b"}}, docs, 110);
  CHECK(d.score < 0.35);
}

TEST_CASE("coherence_cv: missing keyword contributes zero with flag") {
  std::vector<std::string> docs = {"a b", "a b"};
  auto d = themes::coherence_cv({{"a", "ghost"}}, docs, 110);
  CHECK(d.missing_keyword);
}

TEST_CASE("coherence_cv: hand-enumerated five-window fixture") {
  // Five one-window docs. occur: a=3/5, b=3/5; cooccur(a,b)=2/5.
  std::vector<std::string> docs = {"a b", "a b", "a c", "b c", "c d"};
  double eps = 1e-12;
  double p_a = 0.6, p_ab = 0.4;
  double x = std::log((p_ab + eps) / (p_a * p_a)) / -std::log(p_ab + eps);  // npmi(a,b)
  // vectors va=[1,x], vb=[x,1]; sum=[1+x,1+x]; cos(va,sum)=(1+x)/(sqrt(2)*sqrt(1+x^2))
  double expected = (1 + x) / (std::sqrt(2.0) * std::sqrt(1 + x * x));
  auto d = themes::coherence_cv({{"a", "b"}}, docs, 110, eps);
  CHECK(d.score == doctest::Approx(expected).epsilon(1e-9));

  SUBCASE("keyword order within a theme does not matter") {
    auto r = themes::coherence_cv({{"b", "a"}}, docs, 110, eps);
    CHECK(r.score == doctest::Approx(d.score).epsilon(1e-12));
  }
}

TEST_CASE("coherence_cv: sliding windows smaller than a long document") {
  // 5 tokens, window 3 -> 3 windows: [a b c] [b c a] [c a b]; a,b co-occur in all.
  std::vector<std::string> docs = {"a b c b c"};
  auto d = themes::coherence_cv({{"b", "c"}}, docs, 3);
  CHECK(d.score == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("select_k: recovers three disjoint-vocabulary themes in 2..6") {
  auto p = hashing_provider();
  std::vector<std::string> texts;
  for (int i = 0; i < 25; ++i)
    for (int theme = 0; theme < 3; ++theme) texts.push_back(themed_text(theme, 1000 + 10 * i));
  auto emb = embed_all(p, texts);
  auto sel = themes::select_k(emb, texts, 2, 6, 17, 110, 6);
  CHECK(sel.report.selected_k == 3);
  CHECK(sel.report.per_k.size() == 5);
  CHECK(sel.model.clustering.k == 3);

  SUBCASE("single-value range selects that value") {
    auto one = themes::select_k(emb, texts, 4, 4, 17, 110, 6);
    CHECK(one.report.selected_k == 4);
  }

  SUBCASE("reseeding perturbs coherence only slightly on this fixture") {
    auto sel2 = themes::select_k(emb, texts, 2, 6, 18, 110, 6);
    for (const auto& [k, v] : sel.report.per_k)
      CHECK(std::abs(v - sel2.report.per_k.at(k)) < 0.05);
  }
}

TEST_CASE("select_k: invalid range rejected") {
  auto p = hashing_provider();
  auto emb = embed_all(p, {"one two", "three four", "five six"});
  CHECK_THROWS_AS(themes::select_k(emb, {"one two", "three four", "five six"}, 2, 9, 1),
                  AnalysisError);
}

TEST_CASE("theme_trends: single theme reduces to the plain slope") {
  std::vector<themes::ScoredTurn> turns;
  std::vector<double> series = {0.2, 0.25, 0.3, 0.4, 0.45};
  for (int r = 0; r < 5; ++r)
    turns.push_back({"treatment", simulate::Condition::Standard, "m", r, series[r], 0});
  auto trends = themes::theme_trends(turns, {{{"kw", 1.0}}});
  REQUIRE(trends.size() == 1);
  REQUIRE(trends[0].slopes.count("treatment/standard/m") == 1);
  CHECK(trends[0].slopes.at("treatment/standard/m") ==
        doctest::Approx(stats::ols_slope(series)).epsilon(1e-12));
}

TEST_CASE("theme_trends: signed drifts recovered per theme") {
  std::vector<themes::ScoredTurn> turns;
  std::mt19937_64 rng(55);
  for (int conv = 0; conv < 30; ++conv) {
    for (int r = 0; r < 20; ++r) {
      turns.push_back({"treatment", simulate::Condition::Standard, "m", r,
                       0.5 + 0.01 * r + 0.02 * next_gaussian(rng), 0});
      turns.push_back({"treatment", simulate::Condition::Standard, "m", r,
                       0.5 - 0.01 * r + 0.02 * next_gaussian(rng), 1});
    }
  }
  auto trends = themes::theme_trends(turns, {{{"a", 1.0}}, {{"b", 1.0}}});
  REQUIRE(trends.size() == 2);
  double s0 = trends[0].slopes.at("treatment/standard/m");
  double s1 = trends[1].slopes.at("treatment/standard/m");
  CHECK(s0 > 0);
  CHECK(s1 < 0);
  CHECK(std::abs(s0 - 0.01) < 0.002);
  CHECK(std::abs(s1 + 0.01) < 0.002);
}

TEST_CASE("theme_trends: cells with fewer than two occupied rounds are flagged") {
  std::vector<themes::ScoredTurn> turns = {
      {"control", simulate::Condition::Standard, "m", 4, 0.5, 0}};
  auto trends = themes::theme_trends(turns, {{{"kw", 1.0}}});
  REQUIRE(trends.size() == 1);
  CHECK(trends[0].slopes.empty());
  REQUIRE(trends[0].flagged_cells.size() == 1);
  CHECK(trends[0].flagged_cells[0] == "control/standard/m");
}

TEST_CASE("partition invariant: theme sizes sum to assigned turns") {
  auto p = hashing_provider();
  std::vector<std::string> texts;
  for (int i = 0; i < 30; ++i) texts.push_back(themed_text(i % 3, 2000 + i));
  auto emb = embed_all(p, texts);
  auto cl = themes::cluster_turns(emb, 4, 3);
  std::vector<int> sizes(4, 0);
  for (int a : cl.assignment) {
    REQUIRE(a >= 0);
    REQUIRE(a < 4);
    ++sizes[a];
  }
  int total = 0;
  for (int s : sizes) total += s;
  CHECK(total == 30);
}
