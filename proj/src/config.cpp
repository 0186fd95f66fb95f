#include "delusim/config.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <sstream>

#include "delusim/common.hpp"
#include "json.hpp"

namespace delusim::config {

using nlohmann::json;

namespace {

std::string trim(std::string s) {
  auto issp = [](unsigned char c) { return std::isspace(c); };
  while (!s.empty() && issp(s.front())) s.erase(s.begin());
  while (!s.empty() && issp(s.back())) s.pop_back();
  return s;
}

TomlValue parse_value(std::string raw) {
  raw = trim(raw);
  if (raw.empty()) throw ConfigError("empty toml value");
  if (raw.front() == '"') {
    if (raw.size() < 2 || raw.back() != '"') throw ConfigError("unterminated string: " + raw);
    std::string out;
    for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
      if (raw[i] == '\\' && i + 2 < raw.size()) {
        ++i;
        switch (raw[i]) {
          case 'n': out.push_back('\n'); break;
          case 't': out.push_back('\t'); break;
          case '"': out.push_back('"'); break;
          case '\\': out.push_back('\\'); break;
          default: throw ConfigError("unsupported escape in: " + raw);
        }
      } else {
        out.push_back(raw[i]);
      }
    }
    return out;
  }
  if (raw.front() == '[') {
    if (raw.back() != ']') throw ConfigError("unterminated array: " + raw);
    std::string inner = raw.substr(1, raw.size() - 2);
    std::vector<std::string> strings;
    std::vector<double> numbers;
    bool is_string = false, any = false;
    std::string item;
    bool in_quotes = false;
    auto flush = [&] {
      std::string v = trim(item);
      item.clear();
      if (v.empty()) return;
      any = true;
      if (v.front() == '"') {
        is_string = true;
        strings.push_back(std::get<std::string>(parse_value(v)));
      } else {
        numbers.push_back(std::stod(v));
      }
    };
    for (char c : inner) {
      if (c == '"') in_quotes = !in_quotes;
      if (c == ',' && !in_quotes) {
        flush();
      } else {
        item.push_back(c);
      }
    }
    flush();
    if (!any) return std::vector<std::string>{};
    if (is_string) return strings;
    return numbers;
  }
  if (raw == "true") return true;
  if (raw == "false") return false;
  bool is_float = raw.find_first_of(".eE") != std::string::npos;
  try {
    if (is_float) return std::stod(raw);
    return static_cast<std::int64_t>(std::stoll(raw));
  } catch (const std::exception&) {
    throw ConfigError("cannot parse toml value: " + raw);
  }
}

}  // namespace

TomlTable parse_toml(const std::string& content) {
  TomlTable table;
  std::string section;
  std::istringstream in(content);
  std::string line;
  while (std::getline(in, line)) {
    // strip comments outside quotes
    bool in_quotes = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') in_quotes = !in_quotes;
      if (line[i] == '#' && !in_quotes) {
        line.resize(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("bad toml section header: " + line);
      section = trim(line.substr(1, line.size() - 2));
      table[section];
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("bad toml line: " + line);
    std::string key = trim(line.substr(0, eq));
    table[section][key] = parse_value(line.substr(eq + 1));
  }
  return table;
}

void apply_override(TomlTable& table, const std::string& assignment) {
  auto eq = assignment.find('=');
  auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq)
    throw ConfigError("override must be section.key=value: " + assignment);
  std::string section = assignment.substr(0, dot);
  std::string key = assignment.substr(dot + 1, eq - dot - 1);
  table[section][key] = parse_value(assignment.substr(eq + 1));
}

namespace {

template <typename T>
T get_or(const TomlTable& t, const std::string& section, const std::string& key, T fallback) {
  auto sit = t.find(section);
  if (sit == t.end()) return fallback;
  auto kit = sit->second.find(key);
  if (kit == sit->second.end()) return fallback;
  if constexpr (std::is_same_v<T, double>) {
    if (const auto* i = std::get_if<std::int64_t>(&kit->second))
      return static_cast<double>(*i);
  }
  if constexpr (std::is_same_v<T, int> || std::is_same_v<T, std::size_t> ||
                std::is_same_v<T, std::uint64_t>) {
    if (const auto* i = std::get_if<std::int64_t>(&kit->second)) return static_cast<T>(*i);
    throw ConfigError("expected integer for " + section + "." + key);
  } else if (const T* v = std::get_if<T>(&kit->second)) {
    return *v;
  } else {
    throw ConfigError("wrong type for " + section + "." + key);
  }
}

}  // namespace

RunConfig RunConfig::from_toml(const TomlTable& t) {
  RunConfig c;
  c.output_dir = get_or<std::string>(t, "run", "output_dir", "runs/default");
  c.seed = get_or<std::uint64_t>(t, "run", "seed", 42);

  c.corpus_paths = get_or<std::vector<std::string>>(t, "corpus", "paths", {});
  c.corpus_format = get_or<std::string>(t, "corpus", "format", "jsonl") == "csv"
                        ? corpus::CorpusFormat::Csv
                        : corpus::CorpusFormat::Jsonl;
  auto to_set = [](const std::vector<std::string>& v) {
    return std::set<std::string>(v.begin(), v.end());
  };
  c.cohort_spec.treatment_communities =
      to_set(get_or<std::vector<std::string>>(t, "cohorts", "treatment_communities", {}));
  c.cohort_spec.control_communities =
      to_set(get_or<std::vector<std::string>>(t, "cohorts", "control_communities", {}));
  c.cohort_spec.exclusion_communities =
      to_set(get_or<std::vector<std::string>>(t, "cohorts", "exclusion_communities", {}));
  c.cohort_spec.min_treatment_posts = get_or<int>(t, "cohorts", "min_treatment_posts", 100);

  c.lexicon_path = get_or<std::string>(t, "lexicon", "path", "");
  c.embedding.kind = get_or<std::string>(t, "embedding", "kind", "hashing") == "remote"
                         ? features::ProviderKind::Remote
                         : features::ProviderKind::Hashing;
  c.embedding.endpoint_url = get_or<std::string>(t, "embedding", "endpoint_url", "");
  c.embedding.model_name = get_or<std::string>(t, "embedding", "model_name", "hashing-v1");
  c.embedding.dimension = get_or<std::size_t>(t, "embedding", "dimension", 384);
  c.embedding.cache_path = get_or<std::string>(t, "embedding", "cache_path", "");
  c.embedding.max_batch = get_or<std::size_t>(t, "embedding", "max_batch", 64);

  c.k_min = get_or<int>(t, "matching", "k_min", 3);
  c.k_max = get_or<int>(t, "matching", "k_max", 10);
  c.l2_lambda = get_or<double>(t, "matching", "l2_lambda", 1.0);
  c.min_per_group = get_or<int>(t, "matching", "min_per_group", 10);
  c.max_iter = get_or<int>(t, "matching", "max_iter", 3000);

  c.labeled_path = get_or<std::string>(t, "scorer", "labeled_path", "");
  c.test_fraction = get_or<double>(t, "scorer", "test_fraction", 0.25);
  c.threshold = get_or<double>(t, "scorer", "threshold", 0.5);
  c.scorer_l2 = get_or<double>(t, "scorer", "l2_lambda", 0.1);

  c.rounds = get_or<int>(t, "simulate", "rounds", 34);
  c.concurrency = get_or<int>(t, "simulate", "concurrency", 4);
  c.conversations_per_user = get_or<int>(t, "simulate", "conversations_per_user", 1);
  c.persona_exemplars = get_or<std::size_t>(t, "simulate", "persona_exemplars", 5);
  c.max_users_per_cohort = get_or<std::size_t>(t, "simulate", "max_users_per_cohort", 0);
  c.assistant_kind = get_or<std::string>(t, "simulate", "assistant_kind", "mock-adaptive");
  c.assistant_url = get_or<std::string>(t, "simulate", "assistant_url", "");
  c.assistant_models = get_or<std::vector<std::string>>(t, "simulate", "assistant_models",
                                                        {"mock-assistant"});
  c.simuser_kind = get_or<std::string>(t, "simulate", "simuser_kind", "mock-auto");
  c.simuser_url = get_or<std::string>(t, "simulate", "simuser_url", "");
  c.simuser_model = get_or<std::string>(t, "simulate", "simuser_model", "mock-simuser");
  c.intervention_enabled = get_or<bool>(t, "simulate", "intervention_enabled", false);
  c.rate_limit_per_min = get_or<double>(t, "simulate", "rate_limit_per_min", 600.0);
  c.max_retries = get_or<int>(t, "simulate", "max_retries", 3);
  c.intervention.enabled = c.intervention_enabled;
  c.intervention.tmpl =
      get_or<std::string>(t, "intervention", "template", simulate::kDefaultInterventionTemplate);
  c.intervention.score_precision = get_or<int>(t, "intervention", "score_precision", 2);

  c.lowess_frac = get_or<double>(t, "analysis", "lowess_frac", 0.3);
  c.robust_iters = get_or<int>(t, "analysis", "robust_iters", 1);

  c.themes_k_min = get_or<int>(t, "themes", "k_min", 2);
  c.themes_k_max = get_or<int>(t, "themes", "k_max", 6);
  c.coherence_window = get_or<std::size_t>(t, "themes", "window", 110);
  c.top_n_keywords = get_or<std::size_t>(t, "themes", "top_n", 10);
  return c;
}

RunConfig RunConfig::load(const std::string& path, const std::vector<std::string>& overrides) {
  auto table = parse_toml(read_file(path));
  for (const auto& o : overrides) apply_override(table, o);
  RunConfig c = from_toml(table);
  c.validate();
  return c;
}

void RunConfig::validate() const {
  if (output_dir.empty()) throw ConfigError("run.output_dir is required");
  cohort_spec.validate();
  embedding.validate();
  intervention.validate();
  for (const auto& p : corpus_paths)
    if (!std::filesystem::exists(p)) throw ConfigError("corpus path does not exist: " + p);
  if (!lexicon_path.empty() && !std::filesystem::exists(lexicon_path))
    throw ConfigError("lexicon path does not exist: " + lexicon_path);
  if (!labeled_path.empty() && !std::filesystem::exists(labeled_path))
    throw ConfigError("labeled corpus path does not exist: " + labeled_path);
  if (rounds < 1) throw ConfigError("simulate.rounds must be >= 1");
  if (k_min < 3 || k_max > 10 || k_min > k_max)
    throw ConfigError("matching k range must lie within [3,10]");
}

std::string RunConfig::snapshot_json() const {
  json j = {
      {"output_dir", output_dir},
      {"seed", seed},
      {"corpus_paths", corpus_paths},
      {"min_treatment_posts", cohort_spec.min_treatment_posts},
      {"lexicon_path", lexicon_path},
      {"embedding_fingerprint", embedding.fingerprint()},
      {"k_min", k_min},
      {"k_max", k_max},
      {"l2_lambda", l2_lambda},
      {"min_per_group", min_per_group},
      {"labeled_path", labeled_path},
      {"test_fraction", test_fraction},
      {"threshold", threshold},
      {"rounds", rounds},
      {"conversations_per_user", conversations_per_user},
      {"intervention_enabled", intervention_enabled},
      {"assistant_models", assistant_models},
      {"assistant_system_prompt", ""},  // standard condition sends no system prompt
      {"lowess_frac", lowess_frac},
      {"robust_iters", robust_iters},
      {"themes_k_range", {themes_k_min, themes_k_max}},
      {"coherence_window", coherence_window},
  };
  return j.dump(2);
}

}  // namespace delusim::config
