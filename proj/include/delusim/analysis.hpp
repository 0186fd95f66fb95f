#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "delusim/lexicon.hpp"
#include "delusim/simulate.hpp"
#include "delusim/stats.hpp"

namespace delusim::analysis {

struct Trajectory {
  std::string conversation_id;
  std::string cohort;  // "treatment" / "control"
  simulate::Condition condition = simulate::Condition::Standard;
  std::string assistant_model;
  int stratum = -1;
  std::vector<double> scores;  // per SimUser round, in [0,1]
};

// Extracts the per-round score series; throws if any SimUser turn is unscored.
Trajectory trajectory_from(const simulate::Transcript& transcript, const std::string& cohort);

struct GroupKey {
  std::string cohort;
  simulate::Condition condition = simulate::Condition::Standard;
  std::string model;
  int stratum = -1;  // -1 = pooled over strata

  std::string label() const;
  bool operator<(const GroupKey& o) const;
};

struct GroupSummary {
  GroupKey key;
  std::size_t n = 0;          // trajectories included
  std::size_t excluded = 0;   // shorter (truncated) trajectories dropped
  double mean_score = 0.0;    // grand mean over all scores
  double slope = 0.0;         // ols slope of per-round means
  std::vector<double> per_round_means;
  std::vector<double> lowess_curve;
  std::vector<double> per_trajectory_slopes;  // dispersion diagnostic
};

GroupSummary group_summary(const std::vector<Trajectory>& trajectories, const GroupKey& key,
                           double lowess_frac = 0.3, int robust_iters = 1);

// One summary per observed (cohort, condition, model) plus per-stratum rows
// when per_stratum is set.
std::vector<GroupSummary> summarize_groups(const std::vector<Trajectory>& trajectories,
                                           double lowess_frac = 0.3, int robust_iters = 1,
                                           bool per_stratum = false);

struct EffectRow {
  std::string model;
  stats::EffectReport report;  // treatment-standard vs control-standard,
                               // per-conversation mean scores
};

std::vector<EffectRow> treatment_control_effects(const std::vector<Trajectory>& trajectories);

struct FidelityInput {
  std::string user_id;
  int stratum = 0;
  std::vector<std::string> own_texts;        // the user's historical posts
  std::vector<std::string> generated_texts;  // SimUser utterances for that user
};

struct FidelityRow {
  int stratum = 0;
  std::size_t n = 0;
  double s_actual = 0.0;
  double s_random = 0.0;
  double pct_diff = 0.0;
  double cohens_d = 0.0;
  double paired_t = 0.0;
  double p_value = 1.0;
};

struct FidelityReport {
  std::vector<FidelityRow> rows;
  std::vector<int> skipped_strata;       // strata with <2 usable users
  std::vector<std::string> skipped_users;  // constant feature vectors
};

FidelityReport fidelity_eval(const std::vector<FidelityInput>& users,
                             const features::Lexicon& lexicon, std::uint64_t seed);

// CSV emission (fixed formatting so identical runs are byte-identical).
std::string format_double(double v);
void write_group_summaries_csv(const std::string& path, const std::vector<GroupSummary>& groups);
void write_per_round_means_csv(const std::string& path, const std::vector<GroupSummary>& groups);
void write_effects_csv(const std::string& path, const std::vector<EffectRow>& effects);
void write_fidelity_csv(const std::string& path, const FidelityReport& report);

// Static SVG line chart; each series is (name, values). Data embedded in an
// XML comment for auditability; no timestamps.
void write_line_chart_svg(const std::string& path, const std::string& title,
                          const std::vector<std::pair<std::string, std::vector<double>>>& series);

// One chart per group: raw per-round means vs the LOWESS curve.
void write_group_charts(const std::string& dir, const std::vector<GroupSummary>& groups);

}  // namespace delusim::analysis
