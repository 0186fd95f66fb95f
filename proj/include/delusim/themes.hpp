#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "delusim/analysis.hpp"

namespace delusim::themes {

struct Clustering {
  int k = 0;
  std::vector<double> centroids;  // k x d, unit rows
  std::vector<int> assignment;    // per input row
  double objective = 0.0;         // mean cosine to assigned centroid
  int iterations = 0;
};

// Spherical k-means (cosine) with deterministic k-means++ init under seed.
Clustering cluster_turns(const std::vector<std::vector<double>>& embeddings, int k,
                         std::uint64_t seed, int max_iters = 100);

struct WeightedTerm {
  std::string term;
  double weight = 0.0;
};

// Class-based term weighting: each theme's texts form one class document;
// weight(term, c) = tf(term, c) * log(1 + A / f(term)), A = average class
// token count, f = term frequency across all classes.
std::vector<std::vector<WeightedTerm>> ctfidf_keywords(const std::vector<int>& assignment,
                                                       const std::vector<std::string>& texts,
                                                       int k, std::size_t top_n = 10);

struct CoherenceDetail {
  double score = 0.0;
  bool missing_keyword = false;  // some keyword absent from the reference corpus
};

// c_v: boolean sliding windows over the reference corpus, NPMI vectors with
// one-set segmentation, mean indirect cosine similarity.
CoherenceDetail coherence_cv(const std::vector<std::vector<std::string>>& theme_keywords,
                             const std::vector<std::string>& reference_texts,
                             std::size_t window = 110, double eps = 1e-12);

struct ThemeModel {
  Clustering clustering;
  std::vector<std::vector<WeightedTerm>> keywords;
  std::uint64_t seed = 0;
};

struct CoherenceReport {
  std::map<int, double> per_k;
  int selected_k = 0;  // argmax, ties -> smaller k
};

struct SelectResult {
  CoherenceReport report;
  ThemeModel model;  // refit at selected_k
};

SelectResult select_k(const std::vector<std::vector<double>>& embeddings,
                      const std::vector<std::string>& texts, int k_min, int k_max,
                      std::uint64_t seed, std::size_t window = 110, std::size_t top_n = 10);

struct ThemeTrend {
  int theme = 0;
  std::vector<std::string> keywords;
  // (cohort/condition/model) label -> slope of per-round mean score; cells
  // with <2 occupied rounds are omitted.
  std::map<std::string, double> slopes;
  std::vector<std::string> flagged_cells;
};

struct ScoredTurn {
  std::string cohort;
  simulate::Condition condition = simulate::Condition::Standard;
  std::string model;
  int round = 0;
  double score = 0.0;
  int theme = 0;
};

std::vector<ThemeTrend> theme_trends(const std::vector<ScoredTurn>& turns,
                                     const std::vector<std::vector<WeightedTerm>>& keywords);

}  // namespace delusim::themes
