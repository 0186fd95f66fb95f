#pragma once

#include <cstdint>
#include <string>

namespace delusim::demo {

struct DemoSpec {
  std::string dir;
  int n_treatment_users = 12;
  int n_control_users = 12;
  int posts_per_user = 12;
  int min_treatment_posts = 8;
  int n_labeled_per_class = 150;
  int rounds = 10;
  bool intervention = false;
  std::uint64_t seed = 7;
};

// Writes corpus.jsonl, lexicon.dic, labeled.jsonl, and run.toml under
// spec.dir. Deterministic in the seed; the texts come from the mock
// vocabularies so the whole pipeline runs offline.
void write_demo(const DemoSpec& spec);

}  // namespace delusim::demo
