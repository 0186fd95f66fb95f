#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "delusim/embedding.hpp"
#include "delusim/logistic.hpp"

namespace delusim::scorer {

enum class Label { Delusional, NonDelusional };

struct LabeledPost {
  std::string text;
  Label label = Label::NonDelusional;
  std::string source_community;
};

struct TrainMetadata {
  std::uint64_t seed = 0;
  double test_fraction = 0.25;
  double l2_lambda = 0.0;
};

struct ScorerModel {
  std::string embedding_fingerprint;
  optim::LogisticFit fit;
  TrainMetadata meta;

  std::string to_json() const;
  static ScorerModel from_json(const std::string& json_text);
  void save(const std::string& path) const;
  static ScorerModel load(const std::string& path);
};

struct Split {
  std::vector<LabeledPost> train;
  std::vector<LabeledPost> test;
};

// Stratified-by-label shuffle split, deterministic under seed.
Split split_corpus(const std::vector<LabeledPost>& corpus, double test_fraction,
                   std::uint64_t seed);

ScorerModel train_scorer(const std::vector<LabeledPost>& train,
                         features::EmbeddingProvider& provider, double l2_lambda,
                         int max_iter = 3000, double tol = 1e-6);

double delusion_score(const ScorerModel& model, features::EmbeddingProvider& provider,
                      const std::string& text);
std::vector<double> delusion_scores(const ScorerModel& model,
                                    features::EmbeddingProvider& provider,
                                    const std::vector<std::string>& texts);

struct EvalMetrics {
  double balanced_accuracy = 0.0;
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  // confusion[actual][predicted], index 0 = Delusional (positive class)
  std::array<std::array<std::size_t, 2>, 2> confusion{};
};

EvalMetrics evaluate_scorer(const ScorerModel& model, features::EmbeddingProvider& provider,
                            const std::vector<LabeledPost>& test, double threshold = 0.5);

std::vector<LabeledPost> load_labeled_jsonl(const std::string& path);

}  // namespace delusim::scorer
