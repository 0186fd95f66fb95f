#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "delusim/common.hpp"
#include "delusim/demo.hpp"
#include "delusim/pipeline.hpp"

using namespace delusim;

namespace {

struct CliOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string k_range;
  int min_per_group = -1;
  double l2 = -1.0;
  double threshold = -1.0;
};

config::RunConfig load_config(CliOptions& opt) {
  if (!opt.k_range.empty()) {
    auto dots = opt.k_range.find("..");
    if (dots == std::string::npos)
      throw ConfigError("--k-range expects MIN..MAX, got: " + opt.k_range);
    opt.overrides.push_back("matching.k_min=" + opt.k_range.substr(0, dots));
    opt.overrides.push_back("matching.k_max=" + opt.k_range.substr(dots + 2));
  }
  if (opt.min_per_group >= 0)
    opt.overrides.push_back("matching.min_per_group=" + std::to_string(opt.min_per_group));
  if (opt.l2 >= 0.0) opt.overrides.push_back("matching.l2_lambda=" + std::to_string(opt.l2));
  if (opt.threshold >= 0.0)
    opt.overrides.push_back("scorer.threshold=" + std::to_string(opt.threshold));
  return config::RunConfig::load(opt.config_path, opt.overrides);
}

void add_common(CLI::App* cmd, CliOptions& opt) {
  cmd->add_option("-c,--config", opt.config_path, "Run configuration (TOML)")->required();
  cmd->add_option("--set", opt.overrides, "Override as section.key=value (repeatable)");
  cmd->add_option("--k-range", opt.k_range, "Stratum count sweep range, e.g. 3..10");
  cmd->add_option("--min-per-group", opt.min_per_group,
                  "Minimum users per group for a stratum to survive pruning");
  cmd->add_option("--l2", opt.l2, "L2 penalty for the propensity model");
  cmd->add_option("--threshold", opt.threshold, "Scorer classification threshold");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"delusim: cohort matching, conversation simulation, and trajectory analysis"};
  app.require_subcommand(1);

  CliOptions opt;
  std::string pending_stage;

  for (const auto& stage : pipeline::kStageOrder) {
    auto* cmd = app.add_subcommand(stage, "Run the '" + stage + "' stage");
    add_common(cmd, opt);
    cmd->callback([&pending_stage, stage] { pending_stage = stage; });
  }
  auto* pipe = app.add_subcommand("pipeline", "Run every stage in order");
  add_common(pipe, opt);

  demo::DemoSpec demo_spec;
  auto* mk = app.add_subcommand("make-demo", "Generate a self-contained demo dataset");
  mk->add_option("-d,--dir", demo_spec.dir, "Output directory")->required();
  mk->add_option("--treatment-users", demo_spec.n_treatment_users, "Treatment cohort size");
  mk->add_option("--control-users", demo_spec.n_control_users, "Control cohort size");
  mk->add_option("--rounds", demo_spec.rounds, "Conversation rounds in the generated config");
  mk->add_option("--seed", demo_spec.seed, "Generator seed");
  mk->add_flag("--intervention", demo_spec.intervention,
               "Enable the score-conditioned intervention arm in the generated config");

  CLI11_PARSE(app, argc, argv);

  try {
    if (mk->parsed()) {
      demo::write_demo(demo_spec);
      std::printf("demo written to %s (config: %s/run.toml)\n", demo_spec.dir.c_str(),
                  demo_spec.dir.c_str());
      return 0;
    }
    auto cfg = load_config(opt);
    if (pipe->parsed()) {
      pipeline::run_all(cfg);
      std::printf("pipeline complete; outputs in %s\n", cfg.output_dir.c_str());
    } else {
      pipeline::run_stage(pending_stage, cfg);
      std::printf("stage '%s' complete\n", pending_stage.c_str());
    }
    return 0;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const DependencyError& e) {
    std::fprintf(stderr, "dependency error: %s\n", e.what());
    return 3;
  } catch (const TransportError& e) {
    std::fprintf(stderr, "transport error: %s\n", e.what());
    return 4;
  } catch (const AnalysisError& e) {
    std::fprintf(stderr, "analysis error: %s\n", e.what());
    return 5;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
