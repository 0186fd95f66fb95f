#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <set>

#include "delusim/common.hpp"
#include "delusim/config.hpp"
#include "delusim/demo.hpp"
#include "delusim/pipeline.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace delusim;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct DemoRun {
  fs::path root;
  config::RunConfig cfg;

  explicit DemoRun(const std::string& name, int rounds = 4, bool intervention = false) {
    root = fs::temp_directory_path() / name;
    fs::remove_all(root);
    demo::DemoSpec spec;
    spec.dir = root.string();
    spec.n_treatment_users = 8;
    spec.n_control_users = 8;
    spec.posts_per_user = 10;
    spec.min_treatment_posts = 6;
    spec.n_labeled_per_class = 60;
    spec.rounds = rounds;
    spec.intervention = intervention;
    demo::write_demo(spec);
    cfg = config::RunConfig::load((root / "run.toml").string());
  }
  ~DemoRun() { fs::remove_all(root); }

  fs::path out(const std::string& rel) const { return fs::path(cfg.output_dir) / rel; }
};

json load_manifest(const DemoRun& run) {
  return json::parse(read_file(run.out("manifest.json").string()));
}

}  // namespace

TEST_CASE("write_demo emits a loadable self-contained fixture") {
  DemoRun run("delusim_pipe_fixture");
  CHECK(fs::exists(run.root / "corpus.jsonl"));
  CHECK(fs::exists(run.root / "lexicon.dic"));
  CHECK(fs::exists(run.root / "labeled.jsonl"));
  CHECK(run.cfg.rounds == 4);
  CHECK(run.cfg.assistant_kind != "http");
}

TEST_CASE("run_all produces every artifact and an all-ok manifest") {
  DemoRun run("delusim_pipe_all");
  pipeline::run_all(run.cfg);

  for (const char* rel :
       {"posts.jsonl", "ingest_stats.json", "users.jsonl", "cohort_stats.json",
        "covariates.json", "matching.json", "balance_report.csv", "scorer_model.json",
        "scorer_test_split.jsonl", "scorer_eval.json", "simulate_index.jsonl",
        "group_summaries.csv", "per_round_means.csv", "effects.csv", "fidelity.csv",
        "coherence.csv", "themes.csv", "theme_trends.csv", "manifest.json"}) {
    INFO(rel);
    CHECK(fs::exists(run.out(rel)));
  }
  CHECK(fs::exists(run.out("plots")));

  auto manifest = load_manifest(run);
  for (const auto& stage : pipeline::kStageOrder) {
    INFO(stage);
    REQUIRE(manifest["stages"].contains(stage));
    CHECK(manifest["stages"][stage]["status"] == "ok");
    for (auto& [path, hash] : manifest["stages"][stage]["outputs"].items()) {
      CHECK(fs::exists(run.out(path)));
      CHECK(hash.get<std::string>().size() == 64);
    }
  }

  SUBCASE("transcripts exist and are complete") {
    int complete = 0;
    std::istringstream index(read_file(run.out("simulate_index.jsonl").string()));
    std::string line;
    while (std::getline(index, line)) {
      if (line.empty()) continue;
      auto entry = json::parse(line);
      CHECK(fs::exists(run.out(entry["file"].get<std::string>())));
      if (entry["status"] == "complete") ++complete;
    }
    CHECK(complete > 0);
  }

  SUBCASE("rerun hits the cache for every stage") {
    pipeline::run_all(run.cfg);
    auto again = load_manifest(run);
    for (const auto& stage : pipeline::kStageOrder) {
      INFO(stage);
      CHECK(again["stages"][stage]["cache_hit"] == true);
    }
  }
}

TEST_CASE("stages gate on their dependencies") {
  DemoRun run("delusim_pipe_deps");
  CHECK_THROWS_AS(pipeline::run_stage("cohorts", run.cfg), DependencyError);
  pipeline::run_stage("ingest", run.cfg);
  CHECK_THROWS_AS(pipeline::run_stage("analyze", run.cfg), DependencyError);
  pipeline::run_stage("cohorts", run.cfg);
  CHECK_NOTHROW(pipeline::run_stage("covariates", run.cfg));
  CHECK_THROWS_AS(pipeline::run_stage("score", run.cfg), DependencyError);
}

TEST_CASE("unknown stage is a config error") {
  DemoRun run("delusim_pipe_unknown");
  CHECK_THROWS_AS(pipeline::run_stage("nonsense", run.cfg), ConfigError);
}

TEST_CASE("two runs from the same fixture give byte-identical tables") {
  DemoRun a("delusim_pipe_rep_a");
  DemoRun b("delusim_pipe_rep_b");
  pipeline::run_all(a.cfg);
  pipeline::run_all(b.cfg);
  for (const char* rel : {"balance_report.csv", "group_summaries.csv", "per_round_means.csv",
                          "effects.csv", "fidelity.csv", "coherence.csv", "themes.csv",
                          "theme_trends.csv"}) {
    INFO(rel);
    CHECK(read_file(a.out(rel).string()) == read_file(b.out(rel).string()));
  }
}

TEST_CASE("intervention demo runs and records both conditions") {
  DemoRun run("delusim_pipe_intv", 4, true);
  pipeline::run_all(run.cfg);
  std::set<std::string> conditions;
  std::istringstream index(read_file(run.out("simulate_index.jsonl").string()));
  std::string line;
  while (std::getline(index, line)) {
    if (line.empty()) continue;
    conditions.insert(json::parse(line)["condition"].get<std::string>());
  }
  CHECK(conditions.count("standard") == 1);
  CHECK(conditions.count("intervention") == 1);
}
