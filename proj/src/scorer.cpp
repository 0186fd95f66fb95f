#include "delusim/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "delusim/common.hpp"
#include "json.hpp"

namespace delusim::scorer {

using nlohmann::json;

std::string ScorerModel::to_json() const {
  json j = {
      {"format_version", 1},
      {"embedding_fingerprint", embedding_fingerprint},
      {"weights", fit.weights},
      {"bias", fit.bias},
      {"iterations_used", fit.iterations_used},
      {"converged", fit.converged},
      {"train_metadata",
       {{"seed", meta.seed}, {"test_fraction", meta.test_fraction}, {"l2_lambda", meta.l2_lambda}}},
  };
  return j.dump(2);
}

ScorerModel ScorerModel::from_json(const std::string& json_text) {
  json j = json::parse(json_text);
  ScorerModel m;
  m.embedding_fingerprint = j.at("embedding_fingerprint").get<std::string>();
  m.fit.weights = j.at("weights").get<std::vector<double>>();
  m.fit.bias = j.at("bias").get<double>();
  m.fit.iterations_used = j.value("iterations_used", 0);
  m.fit.converged = j.value("converged", true);
  const auto& meta = j.at("train_metadata");
  m.meta.seed = meta.at("seed").get<std::uint64_t>();
  m.meta.test_fraction = meta.at("test_fraction").get<double>();
  m.meta.l2_lambda = meta.at("l2_lambda").get<double>();
  return m;
}

void ScorerModel::save(const std::string& path) const { write_file_atomic(path, to_json()); }

ScorerModel ScorerModel::load(const std::string& path) { return from_json(read_file(path)); }

Split split_corpus(const std::vector<LabeledPost>& corpus, double test_fraction,
                   std::uint64_t seed) {
  std::vector<std::size_t> pos_idx, neg_idx;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    (corpus[i].label == Label::Delusional ? pos_idx : neg_idx).push_back(i);
  if (pos_idx.size() < 4 || neg_idx.size() < 4)
    throw AnalysisError("split_corpus requires >=4 items per class");

  std::mt19937_64 rng(seed);
  Split split;
  for (auto* idx : {&pos_idx, &neg_idx}) {
    // Fisher-Yates with the shared unit generator for cross-platform stability.
    for (std::size_t i = idx->size() - 1; i > 0; --i) {
      std::size_t j = static_cast<std::size_t>(next_unit(rng) * static_cast<double>(i + 1));
      j = std::min(j, i);
      std::swap((*idx)[i], (*idx)[j]);
    }
    std::size_t n_test =
        static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(idx->size())));
    for (std::size_t i = 0; i < idx->size(); ++i)
      (i < n_test ? split.test : split.train).push_back(corpus[(*idx)[i]]);
  }
  return split;
}

ScorerModel train_scorer(const std::vector<LabeledPost>& train,
                         features::EmbeddingProvider& provider, double l2_lambda, int max_iter,
                         double tol) {
  std::vector<std::string> texts;
  std::vector<int> labels;
  for (const auto& item : train) {
    texts.push_back(item.text);
    labels.push_back(item.label == Label::Delusional ? 1 : 0);
  }
  auto embeddings = provider.embed(texts);
  std::size_t d = provider.config().dimension;
  std::vector<double> x;
  x.reserve(texts.size() * d);
  for (const auto& e : embeddings) x.insert(x.end(), e.begin(), e.end());

  ScorerModel model;
  model.embedding_fingerprint = provider.config().fingerprint();
  model.fit = optim::fit_logistic(x, texts.size(), d, labels, l2_lambda, max_iter, tol);
  model.meta.l2_lambda = l2_lambda;
  return model;
}

namespace {

void check_fingerprint(const ScorerModel& model, const features::EmbeddingProvider& provider) {
  if (model.embedding_fingerprint != provider.config().fingerprint())
    throw ConfigError("scorer model fingerprint does not match active embedding provider");
}

}  // namespace

std::vector<double> delusion_scores(const ScorerModel& model,
                                    features::EmbeddingProvider& provider,
                                    const std::vector<std::string>& texts) {
  check_fingerprint(model, provider);
  auto embeddings = provider.embed(texts);
  std::vector<double> scores(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    double z = model.fit.bias;
    for (std::size_t j = 0; j < embeddings[i].size(); ++j)
      z += model.fit.weights[j] * embeddings[i][j];
    scores[i] = optim::sigmoid(z);
  }
  return scores;
}

double delusion_score(const ScorerModel& model, features::EmbeddingProvider& provider,
                      const std::string& text) {
  return delusion_scores(model, provider, {text})[0];
}

EvalMetrics evaluate_scorer(const ScorerModel& model, features::EmbeddingProvider& provider,
                            const std::vector<LabeledPost>& test, double threshold) {
  if (test.empty()) throw AnalysisError("evaluate_scorer requires a non-empty test set");
  bool has_pos = false, has_neg = false;
  for (const auto& t : test) (t.label == Label::Delusional ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg)
    throw AnalysisError("evaluate_scorer requires both labels in the test set");

  std::vector<std::string> texts;
  for (const auto& t : test) texts.push_back(t.text);
  auto scores = delusion_scores(model, provider, texts);

  EvalMetrics m;
  for (std::size_t i = 0; i < test.size(); ++i) {
    int actual = test[i].label == Label::Delusional ? 0 : 1;
    int predicted = scores[i] >= threshold ? 0 : 1;
    ++m.confusion[actual][predicted];
  }
  double tp = static_cast<double>(m.confusion[0][0]);
  double fn = static_cast<double>(m.confusion[0][1]);
  double fp = static_cast<double>(m.confusion[1][0]);
  double tn = static_cast<double>(m.confusion[1][1]);
  m.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  m.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
  double tnr = tn + fp > 0 ? tn / (tn + fp) : 0.0;
  m.balanced_accuracy = (m.recall + tnr) / 2.0;
  m.f1 = m.precision + m.recall > 0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                                    : 0.0;
  return m;
}

std::vector<LabeledPost> load_labeled_jsonl(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<LabeledPost> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) continue;
    LabeledPost p;
    p.text = j.at("text").get<std::string>();
    std::string label = j.at("label").get<std::string>();
    if (label == "delusional")
      p.label = Label::Delusional;
    else if (label == "non_delusional")
      p.label = Label::NonDelusional;
    else
      throw ConfigError("unknown label in labeled corpus: " + label);
    p.source_community = j.value("community", "");
    if (p.text.empty()) throw ConfigError("labeled post with empty text");
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace delusim::scorer
