#include "delusim/demo.hpp"

#include <filesystem>
#include <random>
#include <sstream>

#include "delusim/common.hpp"
#include "delusim/mockllm.hpp"
#include "json.hpp"

namespace delusim::demo {

using nlohmann::json;
namespace fs = std::filesystem;

void write_demo(const DemoSpec& spec) {
  fs::create_directories(spec.dir);
  std::mt19937_64 rng(spec.seed);

  // Corpus: treatment users write delusion-heavy posts in the "deluge"
  // community, control users neutral posts in "everyday".
  std::ostringstream corpus;
  std::int64_t t0 = 1700000000;
  int post_id = 0;
  auto emit_user = [&](const std::string& user, const std::string& community, double base_frac,
                       int n_posts) {
    for (int p = 0; p < n_posts; ++p) {
      double frac = base_frac + 0.1 * next_unit(rng);
      std::string body = mockllm::synthetic_sentence(frac, rng(), 14);
      corpus << json{{"post_id", "p" + std::to_string(post_id++)},
                     {"author_id", user},
                     {"community", community},
                     {"created_at", t0 + 3600 * post_id},
                     {"body", body}}
                    .dump()
             << '\n';
    }
  };
  // Per-user base fractions from overlapping ranges, so the cohorts are not
  // linearly separable and propensity strata keep users from both groups.
  for (int u = 0; u < spec.n_treatment_users; ++u) {
    int extra = static_cast<int>(next_unit(rng) * 6);  // post-count variation
    emit_user("t" + std::to_string(u), "deluge", 0.10 + 0.32 * next_unit(rng),
              spec.posts_per_user + extra);
  }
  for (int u = 0; u < spec.n_control_users; ++u) {
    int extra = static_cast<int>(next_unit(rng) * 6);
    emit_user("c" + std::to_string(u), "everyday", 0.04 + 0.30 * next_unit(rng),
              spec.posts_per_user + extra);
  }
  write_file_atomic((fs::path(spec.dir) / "corpus.jsonl").string(), corpus.str());

  // Lexicon: one category per mock vocabulary.
  std::ostringstream dic;
  dic << "%\n1 delusion\n2 neutral\n%\n";
  for (const auto& w : mockllm::delusion_vocabulary()) dic << w << " 1\n";
  for (const auto& w : mockllm::neutral_vocabulary()) dic << w << " 2\n";
  write_file_atomic((fs::path(spec.dir) / "lexicon.dic").string(), dic.str());

  // Labeled scorer corpus.
  std::ostringstream labeled;
  for (int i = 0; i < spec.n_labeled_per_class; ++i) {
    labeled << json{{"text", mockllm::synthetic_sentence(0.5 + 0.3 * next_unit(rng), rng(), 16)},
                    {"label", "delusional"},
                    {"community", "deluge"}}
                   .dump()
            << '\n';
    labeled << json{{"text", mockllm::synthetic_sentence(0.02 * next_unit(rng), rng(), 16)},
                    {"label", "non_delusional"},
                    {"community", "everyday"}}
                   .dump()
            << '\n';
  }
  write_file_atomic((fs::path(spec.dir) / "labeled.jsonl").string(), labeled.str());

  std::ostringstream toml;
  std::string dir = fs::absolute(spec.dir).string();
  toml << "[run]\n"
       << "output_dir = \"" << dir << "/out\"\n"
       << "seed = " << spec.seed << "\n\n"
       << "[corpus]\n"
       << "paths = [\"" << dir << "/corpus.jsonl\"]\n"
       << "format = \"jsonl\"\n\n"
       << "[cohorts]\n"
       << "treatment_communities = [\"deluge\"]\n"
       << "control_communities = [\"everyday\"]\n"
       << "min_treatment_posts = " << spec.min_treatment_posts << "\n\n"
       << "[lexicon]\n"
       << "path = \"" << dir << "/lexicon.dic\"\n\n"
       // Far fewer dimensions than users: with tiny demo cohorts a 384-dim
       // embedding would make any label assignment linearly separable and
       // the propensity strata degenerate.
       << "[embedding]\n"
       << "kind = \"hashing\"\n"
       << "dimension = 8\n\n"
       << "[matching]\n"
       << "k_min = 3\nk_max = 4\nmin_per_group = 1\n\n"
       << "[scorer]\n"
       << "labeled_path = \"" << dir << "/labeled.jsonl\"\n"
       << "test_fraction = 0.25\n\n"
       << "[simulate]\n"
       << "rounds = " << spec.rounds << "\n"
       << "concurrency = 4\n"
       << "assistant_kind = \"mock-adaptive\"\n"
       << "simuser_kind = \"mock-auto\"\n"
       << "intervention_enabled = " << (spec.intervention ? "true" : "false") << "\n\n"
       << "[themes]\n"
       << "k_min = 2\nk_max = 4\n";
  write_file_atomic((fs::path(spec.dir) / "run.toml").string(), toml.str());
}

}  // namespace delusim::demo
