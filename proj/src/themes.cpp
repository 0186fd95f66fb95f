#include "delusim/themes.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <unordered_map>

#include "delusim/common.hpp"
#include "delusim/embedding.hpp"
#include "delusim/kernels.hpp"

namespace delusim::themes {

Clustering cluster_turns(const std::vector<std::vector<double>>& embeddings, int k,
                         std::uint64_t seed, int max_iters) {
  std::size_t n = embeddings.size();
  if (k < 1) throw AnalysisError("cluster count must be >= 1");
  if (n < static_cast<std::size_t>(k))
    throw AnalysisError("fewer points than clusters: " + std::to_string(n) + " < " +
                        std::to_string(k));
  std::size_t d = embeddings[0].size();

  std::vector<double> points(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> v = embeddings[i];
    features::l2_normalize(v);
    std::copy(v.begin(), v.end(), points.begin() + static_cast<std::ptrdiff_t>(i * d));
  }

  Clustering cl;
  cl.k = k;
  cl.centroids.assign(static_cast<std::size_t>(k) * d, 0.0);

  // k-means++ on cosine distance (1 - dot), deterministic under seed.
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> chosen;
  chosen.push_back(static_cast<std::size_t>(next_unit(rng) * static_cast<double>(n)) % n);
  std::vector<double> dist(n, 2.0);
  while (chosen.size() < static_cast<std::size_t>(k)) {
    const double* last = points.data() + chosen.back() * d;
    for (std::size_t i = 0; i < n; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < d; ++j) dot += points[i * d + j] * last[j];
      dist[i] = std::min(dist[i], 1.0 - dot);
    }
    double total = 0.0;
    for (double x : dist) total += x * x;
    std::size_t pick = 0;
    if (total <= 0.0) {
      pick = chosen.size() % n;  // all points identical to chosen ones
    } else {
      double r = next_unit(rng) * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += dist[i] * dist[i];
        if (acc >= r) {
          pick = i;
          break;
        }
      }
    }
    chosen.push_back(pick);
  }
  for (int c = 0; c < k; ++c)
    std::copy_n(points.begin() + static_cast<std::ptrdiff_t>(chosen[c] * d), d,
                cl.centroids.begin() + static_cast<std::ptrdiff_t>(c * d));

  cl.assignment.assign(n, -1);
  std::vector<double> sims(n);
  for (int iter = 0; iter < max_iters; ++iter) {
    std::vector<int> new_assignment(n);
    kernels::nearest_centroid(points, n, cl.centroids, static_cast<std::size_t>(k), d,
                              new_assignment, sims);

    // recompute centroids as normalized member sums
    std::vector<double> sums(static_cast<std::size_t>(k) * d, 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      int c = new_assignment[i];
      ++counts[c];
      for (std::size_t j = 0; j < d; ++j) sums[static_cast<std::size_t>(c) * d + j] +=
          points[i * d + j];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        // reseed the empty cluster with the worst-fit point
        std::size_t worst = 0;
        for (std::size_t i = 1; i < n; ++i)
          if (sims[i] < sims[worst]) worst = i;
        std::copy_n(points.begin() + static_cast<std::ptrdiff_t>(worst * d), d,
                    sums.begin() + static_cast<std::ptrdiff_t>(c * d));
        new_assignment[worst] = c;
        sims[worst] = 1.0;
      }
      double norm = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        double v = sums[static_cast<std::size_t>(c) * d + j];
        norm += v * v;
      }
      norm = std::sqrt(norm);
      if (norm > 0.0)
        for (std::size_t j = 0; j < d; ++j)
          cl.centroids[static_cast<std::size_t>(c) * d + j] =
              sums[static_cast<std::size_t>(c) * d + j] / norm;
    }

    bool changed = new_assignment != cl.assignment;
    cl.assignment = std::move(new_assignment);
    cl.iterations = iter + 1;
    if (!changed) break;
  }

  kernels::nearest_centroid(points, n, cl.centroids, static_cast<std::size_t>(k), d,
                            cl.assignment, sims);
  double obj = 0.0;
  for (double s : sims) obj += s;
  cl.objective = obj / static_cast<double>(n);
  return cl;
}

std::vector<std::vector<WeightedTerm>> ctfidf_keywords(const std::vector<int>& assignment,
                                                       const std::vector<std::string>& texts,
                                                       int k, std::size_t top_n) {
  if (assignment.size() != texts.size())
    throw AnalysisError("assignment and texts size mismatch");
  std::vector<std::unordered_map<std::string, double>> tf(k);
  std::unordered_map<std::string, double> global_f;
  std::vector<double> class_tokens(k, 0.0);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    int c = assignment[i];
    if (c < 0 || c >= k) throw AnalysisError("assignment index out of range");
    for (const auto& tok : tokenize(texts[i])) {
      tf[c][tok] += 1.0;
      global_f[tok] += 1.0;
      class_tokens[c] += 1.0;
    }
  }
  for (int c = 0; c < k; ++c)
    if (class_tokens[c] == 0.0)
      throw AnalysisError("empty theme " + std::to_string(c) + " in keyword extraction");

  double avg_class_tokens = 0.0;
  for (double t : class_tokens) avg_class_tokens += t;
  avg_class_tokens /= static_cast<double>(k);

  std::vector<std::vector<WeightedTerm>> out(k);
  for (int c = 0; c < k; ++c) {
    std::vector<WeightedTerm> terms;
    for (const auto& [term, count] : tf[c])
      terms.push_back({term, count * std::log1p(avg_class_tokens / global_f[term])});
    std::sort(terms.begin(), terms.end(), [](const WeightedTerm& a, const WeightedTerm& b) {
      if (a.weight != b.weight) return a.weight > b.weight;
      return a.term < b.term;
    });
    if (terms.size() > top_n) terms.resize(top_n);
    out[c] = std::move(terms);
  }
  return out;
}

CoherenceDetail coherence_cv(const std::vector<std::vector<std::string>>& theme_keywords,
                             const std::vector<std::string>& reference_texts,
                             std::size_t window, double eps) {
  if (reference_texts.empty()) throw AnalysisError("c_v requires a non-empty reference corpus");
  for (const auto& kws : theme_keywords)
    if (kws.size() < 2) throw AnalysisError("c_v requires >=2 keywords per theme");

  // union vocabulary of all theme words
  std::set<std::string> vocab;
  for (const auto& kws : theme_keywords) vocab.insert(kws.begin(), kws.end());

  // boolean sliding windows
  std::unordered_map<std::string, std::size_t> occur;
  std::map<std::pair<std::string, std::string>, std::size_t> cooccur;
  std::size_t n_windows = 0;
  for (const auto& doc : reference_texts) {
    auto tokens = tokenize(doc);
    std::size_t len = tokens.size();
    if (len == 0) continue;
    std::size_t n_win = len <= window ? 1 : len - window + 1;
    for (std::size_t w = 0; w < n_win; ++w) {
      std::set<std::string> present;
      std::size_t end = std::min(len, w + window);
      for (std::size_t t = w; t < end; ++t)
        if (vocab.count(tokens[t])) present.insert(tokens[t]);
      for (const auto& a : present) {
        ++occur[a];
        for (const auto& b : present)
          if (a < b) ++cooccur[{a, b}];
      }
      ++n_windows;
    }
  }
  if (n_windows == 0) throw AnalysisError("c_v reference corpus has no tokens");

  CoherenceDetail detail;
  auto prob = [&](const std::string& w) {
    auto it = occur.find(w);
    return it == occur.end() ? 0.0
                             : static_cast<double>(it->second) / static_cast<double>(n_windows);
  };
  auto joint = [&](const std::string& a, const std::string& b) {
    if (a == b) return prob(a);
    auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
    auto it = cooccur.find(key);
    return it == cooccur.end() ? 0.0
                               : static_cast<double>(it->second) / static_cast<double>(n_windows);
  };
  auto npmi = [&](const std::string& a, const std::string& b) {
    double pa = prob(a), pb = prob(b);
    if (pa == 0.0 || pb == 0.0) {
      detail.missing_keyword = true;
      return 0.0;
    }
    double pab = joint(a, b);
    double v = std::log((pab + eps) / (pa * pb)) / -std::log(pab + eps);
    return std::clamp(v, -1.0, 1.0);
  };

  double total = 0.0;
  for (const auto& kws : theme_keywords) {
    std::size_t w = kws.size();
    // NPMI vectors under one-set segmentation, indirect cosine to the sum.
    std::vector<std::vector<double>> vecs(w, std::vector<double>(w));
    for (std::size_t i = 0; i < w; ++i)
      for (std::size_t j = 0; j < w; ++j) vecs[i][j] = npmi(kws[i], kws[j]);
    std::vector<double> sum(w, 0.0);
    for (const auto& v : vecs)
      for (std::size_t j = 0; j < w; ++j) sum[j] += v[j];
    double theme_score = 0.0;
    for (const auto& v : vecs) theme_score += features::cosine(v, sum);
    total += theme_score / static_cast<double>(w);
  }
  detail.score = std::clamp(total / static_cast<double>(theme_keywords.size()), 0.0, 1.0);
  return detail;
}

SelectResult select_k(const std::vector<std::vector<double>>& embeddings,
                      const std::vector<std::string>& texts, int k_min, int k_max,
                      std::uint64_t seed, std::size_t window, std::size_t top_n) {
  if (k_min < 2 || static_cast<std::size_t>(k_max) > embeddings.size() || k_min > k_max)
    throw AnalysisError("select_k range must lie within [2, n]");

  SelectResult result;
  double best = -1.0;
  for (int k = k_min; k <= k_max; ++k) {
    auto cl = cluster_turns(embeddings, k, seed);
    auto kw = ctfidf_keywords(cl.assignment, texts, k, top_n);
    std::vector<std::vector<std::string>> kw_words;
    for (const auto& theme : kw) {
      std::vector<std::string> words;
      for (const auto& t : theme) words.push_back(t.term);
      kw_words.push_back(std::move(words));
    }
    double score = coherence_cv(kw_words, texts, window).score;
    result.report.per_k[k] = score;
    if (score > best) {
      best = score;
      result.report.selected_k = k;
      result.model.clustering = std::move(cl);
      result.model.keywords = std::move(kw);
      result.model.seed = seed;
    }
  }
  return result;
}

std::vector<ThemeTrend> theme_trends(const std::vector<ScoredTurn>& turns,
                                     const std::vector<std::vector<WeightedTerm>>& keywords) {
  // theme -> cell label -> round -> scores
  std::map<int, std::map<std::string, std::map<int, std::vector<double>>>> cells;
  for (const auto& t : turns) {
    std::string label = t.cohort + "/" +
                        (t.condition == simulate::Condition::Standard ? "standard"
                                                                      : "intervention") +
                        "/" + t.model;
    cells[t.theme][label][t.round].push_back(t.score);
  }

  std::vector<ThemeTrend> out;
  for (const auto& [theme, by_label] : cells) {
    ThemeTrend trend;
    trend.theme = theme;
    if (theme >= 0 && static_cast<std::size_t>(theme) < keywords.size())
      for (const auto& t : keywords[theme]) trend.keywords.push_back(t.term);
    for (const auto& [label, by_round] : by_label) {
      if (by_round.size() < 2) {
        trend.flagged_cells.push_back(label);
        continue;
      }
      std::vector<double> xs, ys;
      for (const auto& [round, scores] : by_round) {
        xs.push_back(static_cast<double>(round));
        double m = 0.0;
        for (double s : scores) m += s;
        ys.push_back(m / static_cast<double>(scores.size()));
      }
      trend.slopes[label] = stats::ols_slope_xy(xs, ys);
    }
    out.push_back(std::move(trend));
  }
  return out;
}

}  // namespace delusim::themes
