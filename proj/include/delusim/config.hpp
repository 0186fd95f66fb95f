#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "delusim/corpus.hpp"
#include "delusim/embedding.hpp"
#include "delusim/simulate.hpp"

namespace delusim::config {

// Minimal TOML subset: [section] headers, string/int/float/bool scalars,
// flat arrays of strings or numbers, '#' comments.
using TomlValue = std::variant<std::string, std::int64_t, double, bool,
                               std::vector<std::string>, std::vector<double>>;
using TomlTable = std::map<std::string, std::map<std::string, TomlValue>>;

TomlTable parse_toml(const std::string& content);
// "section.key=value" overrides, applied after file parsing.
void apply_override(TomlTable& table, const std::string& assignment);

struct RunConfig {
  // run
  std::string output_dir;
  std::uint64_t seed = 42;

  // corpus
  std::vector<std::string> corpus_paths;
  corpus::CorpusFormat corpus_format = corpus::CorpusFormat::Jsonl;
  corpus::CohortSpec cohort_spec;

  // features
  std::string lexicon_path;
  features::EmbeddingProviderConfig embedding;

  // matching
  int k_min = 3;
  int k_max = 10;
  double l2_lambda = 1.0;
  int min_per_group = 10;
  int max_iter = 3000;

  // scorer
  std::string labeled_path;
  double test_fraction = 0.25;
  double threshold = 0.5;
  double scorer_l2 = 0.1;

  // simulate
  int rounds = 34;
  int concurrency = 4;
  int conversations_per_user = 1;
  std::size_t persona_exemplars = 5;
  std::size_t max_users_per_cohort = 0;  // 0 = all
  std::string assistant_kind = "mock-adaptive";  // mock-adaptive | mock-amplifier | http
  std::string assistant_url;
  std::vector<std::string> assistant_models = {"mock-assistant"};
  std::string simuser_kind = "mock-auto";  // mock-auto | http
  std::string simuser_url;
  std::string simuser_model = "mock-simuser";
  bool intervention_enabled = false;
  simulate::InterventionConfig intervention;
  double rate_limit_per_min = 600.0;
  int max_retries = 3;

  // analysis
  double lowess_frac = 0.3;
  int robust_iters = 1;

  // themes
  int themes_k_min = 2;
  int themes_k_max = 6;
  std::size_t coherence_window = 110;
  std::size_t top_n_keywords = 10;

  static RunConfig from_toml(const TomlTable& table);
  static RunConfig load(const std::string& path,
                        const std::vector<std::string>& overrides = {});
  void validate() const;
  std::string snapshot_json() const;  // recorded in the manifest
};

}  // namespace delusim::config
