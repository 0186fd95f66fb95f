#include "delusim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <set>
#include <sstream>

#include "delusim/common.hpp"

namespace delusim::analysis {

Trajectory trajectory_from(const simulate::Transcript& transcript, const std::string& cohort) {
  Trajectory tr;
  tr.conversation_id = transcript.conversation_id;
  tr.cohort = cohort;
  tr.condition = transcript.condition;
  tr.assistant_model = transcript.assistant_model;
  tr.stratum = transcript.stratum;
  for (const auto& t : transcript.turns) {
    if (t.speaker != simulate::Speaker::SimUser) continue;
    if (!t.score)
      throw AnalysisError("unscored SimUser turn in transcript " + transcript.conversation_id);
    tr.scores.push_back(*t.score);
  }
  return tr;
}

std::string GroupKey::label() const {
  std::string s = cohort + "/" +
                  (condition == simulate::Condition::Standard ? "standard" : "intervention") +
                  "/" + model;
  if (stratum >= 0) s += "/stratum" + std::to_string(stratum);
  return s;
}

bool GroupKey::operator<(const GroupKey& o) const {
  return std::tie(cohort, condition, model, stratum) <
         std::tie(o.cohort, o.condition, o.model, o.stratum);
}

namespace {

bool matches(const Trajectory& t, const GroupKey& key) {
  return t.cohort == key.cohort && t.condition == key.condition &&
         t.assistant_model == key.model && (key.stratum < 0 || t.stratum == key.stratum);
}

}  // namespace

GroupSummary group_summary(const std::vector<Trajectory>& trajectories, const GroupKey& key,
                           double lowess_frac, int robust_iters) {
  std::vector<const Trajectory*> members;
  std::size_t rounds = 0;
  for (const auto& t : trajectories)
    if (matches(t, key)) {
      members.push_back(&t);
      rounds = std::max(rounds, t.scores.size());
    }
  if (members.empty()) throw AnalysisError("empty trajectory group: " + key.label());

  GroupSummary g;
  g.key = key;
  // Truncated (shorter) trajectories are excluded, not padded.
  std::vector<const Trajectory*> full;
  for (const auto* t : members) {
    if (t->scores.size() == rounds)
      full.push_back(t);
    else
      ++g.excluded;
  }
  g.n = full.size();

  g.per_round_means.assign(rounds, 0.0);
  double grand = 0.0;
  for (const auto* t : full) {
    for (std::size_t r = 0; r < rounds; ++r) g.per_round_means[r] += t->scores[r];
    g.per_trajectory_slopes.push_back(stats::ols_slope(t->scores));
    for (double s : t->scores) grand += s;
  }
  for (double& m : g.per_round_means) m /= static_cast<double>(full.size());
  g.mean_score = grand / static_cast<double>(full.size() * rounds);
  g.slope = stats::ols_slope(g.per_round_means);
  g.lowess_curve = rounds >= 3 ? stats::lowess(g.per_round_means, lowess_frac, robust_iters).smoothed
                               : g.per_round_means;
  return g;
}

std::vector<GroupSummary> summarize_groups(const std::vector<Trajectory>& trajectories,
                                           double lowess_frac, int robust_iters,
                                           bool per_stratum) {
  std::set<GroupKey> keys;
  for (const auto& t : trajectories) {
    keys.insert({t.cohort, t.condition, t.assistant_model, -1});
    if (per_stratum && t.stratum >= 0)
      keys.insert({t.cohort, t.condition, t.assistant_model, t.stratum});
  }
  std::vector<GroupSummary> out;
  for (const auto& key : keys)
    out.push_back(group_summary(trajectories, key, lowess_frac, robust_iters));
  return out;
}

std::vector<EffectRow> treatment_control_effects(const std::vector<Trajectory>& trajectories) {
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_model;
  for (const auto& t : trajectories) {
    if (t.condition != simulate::Condition::Standard || t.scores.empty()) continue;
    double m = stats::mean(t.scores);
    if (t.cohort == "treatment")
      by_model[t.assistant_model].first.push_back(m);
    else if (t.cohort == "control")
      by_model[t.assistant_model].second.push_back(m);
  }
  std::vector<EffectRow> out;
  for (const auto& [model, groups] : by_model) {
    if (groups.first.size() < 2 || groups.second.size() < 2) continue;
    out.push_back({model, stats::welch_t(groups.first, groups.second)});
  }
  return out;
}

FidelityReport fidelity_eval(const std::vector<FidelityInput>& users,
                             const features::Lexicon& lexicon, std::uint64_t seed) {
  FidelityReport report;
  std::map<int, std::vector<std::size_t>> by_stratum;
  for (std::size_t i = 0; i < users.size(); ++i) by_stratum[users[i].stratum].push_back(i);

  std::mt19937_64 rng(seed);
  auto lex_vec = [&](const std::vector<std::string>& texts) {
    std::string joined;
    for (const auto& t : texts) {
      joined += t;
      joined += '\n';
    }
    return features::lexicon_scores(joined, lexicon);
  };

  for (const auto& [stratum, idx] : by_stratum) {
    if (idx.size() < 2) {
      report.skipped_strata.push_back(stratum);
      continue;
    }
    std::vector<double> actual, random_sim, diffs;
    for (std::size_t i : idx) {
      const auto& u = users[i];
      // random same-stratum user != self, seeded
      std::size_t pick;
      do {
        pick = idx[static_cast<std::size_t>(next_unit(rng) * static_cast<double>(idx.size()))
                   % idx.size()];
      } while (pick == i);
      try {
        auto gen = lex_vec(u.generated_texts);
        double r_actual = stats::pearson(gen, lex_vec(u.own_texts));
        double r_random = stats::pearson(gen, lex_vec(users[pick].own_texts));
        actual.push_back(r_actual);
        random_sim.push_back(r_random);
        diffs.push_back(r_actual - r_random);
      } catch (const AnalysisError&) {
        report.skipped_users.push_back(u.user_id);
      }
    }
    if (diffs.size() < 2) {
      report.skipped_strata.push_back(stratum);
      continue;
    }
    FidelityRow row;
    row.stratum = stratum;
    row.n = diffs.size();
    row.s_actual = stats::mean(actual);
    row.s_random = stats::mean(random_sim);
    row.pct_diff = row.s_random != 0.0
                       ? 100.0 * (row.s_actual - row.s_random) / std::fabs(row.s_random)
                       : 0.0;
    try {
      auto t = stats::paired_t(diffs);
      row.cohens_d = t.cohens_d;
      row.paired_t = t.t_statistic;
      row.p_value = t.p_value;
    } catch (const AnalysisError&) {
      // zero-variance diffs: report means only
    }
    report.rows.push_back(row);
  }
  return report;
}

std::string format_double(double v) {
  std::ostringstream out;
  out.precision(12);
  out << v;
  return out.str();
}

namespace {

const char* condition_str(simulate::Condition c) {
  return c == simulate::Condition::Standard ? "standard" : "intervention";
}

}  // namespace

void write_group_summaries_csv(const std::string& path, const std::vector<GroupSummary>& groups) {
  std::ostringstream out;
  out << "cohort,condition,model,stratum,n,excluded,mean,slope\n";
  for (const auto& g : groups) {
    out << g.key.cohort << ',' << condition_str(g.key.condition) << ',' << g.key.model << ','
        << g.key.stratum << ',' << g.n << ',' << g.excluded << ','
        << format_double(g.mean_score) << ',' << format_double(g.slope) << '\n';
  }
  write_file_atomic(path, out.str());
}

void write_per_round_means_csv(const std::string& path, const std::vector<GroupSummary>& groups) {
  std::ostringstream out;
  out << "cohort,condition,model,stratum,round,mean,lowess\n";
  for (const auto& g : groups)
    for (std::size_t r = 0; r < g.per_round_means.size(); ++r)
      out << g.key.cohort << ',' << condition_str(g.key.condition) << ',' << g.key.model << ','
          << g.key.stratum << ',' << r << ',' << format_double(g.per_round_means[r]) << ','
          << format_double(g.lowess_curve[r]) << '\n';
  write_file_atomic(path, out.str());
}

void write_effects_csv(const std::string& path, const std::vector<EffectRow>& effects) {
  std::ostringstream out;
  out << "model,cohens_d,t_statistic,df,p_value\n";
  for (const auto& e : effects)
    out << e.model << ',' << format_double(e.report.cohens_d) << ','
        << format_double(e.report.t_statistic) << ','
        << format_double(e.report.degrees_of_freedom) << ','
        << format_double(e.report.p_value) << '\n';
  write_file_atomic(path, out.str());
}

void write_fidelity_csv(const std::string& path, const FidelityReport& report) {
  std::ostringstream out;
  out << "stratum,n,s_actual,s_random,pct_diff,cohens_d,paired_t,p_value\n";
  for (const auto& r : report.rows)
    out << r.stratum << ',' << r.n << ',' << format_double(r.s_actual) << ','
        << format_double(r.s_random) << ',' << format_double(r.pct_diff) << ','
        << format_double(r.cohens_d) << ',' << format_double(r.paired_t) << ','
        << format_double(r.p_value) << '\n';
  write_file_atomic(path, out.str());
}

void write_line_chart_svg(const std::string& path, const std::string& title,
                          const std::vector<std::pair<std::string, std::vector<double>>>& series) {
  const int width = 640, height = 400, margin = 50;
  double lo = 1e300, hi = -1e300;
  std::size_t n = 0;
  for (const auto& [name, vals] : series) {
    n = std::max(n, vals.size());
    for (double v : vals) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (n < 2 || hi <= lo) {
    lo = 0.0;
    hi = 1.0;
  }
  double span = hi - lo;
  lo -= 0.05 * span;
  hi += 0.05 * span;

  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                 "#8c564b"};
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\">\n";
  out << "<!-- data\n";
  for (const auto& [name, vals] : series) {
    out << name << ':';
    for (double v : vals) out << ' ' << format_double(v);
    out << '\n';
  }
  out << "-->\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">"
      << title << "</text>\n";
  out << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\"" << width - margin
      << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin << "\" y2=\""
      << height - margin << "\" stroke=\"black\"/>\n";
  int ci = 0;
  for (const auto& [name, vals] : series) {
    if (vals.size() < 2) continue;
    const char* color = colors[ci % 6];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < vals.size(); ++i) {
      double x = margin + (width - 2.0 * margin) * static_cast<double>(i) /
                              static_cast<double>(n - 1);
      double y = height - margin - (height - 2.0 * margin) * (vals[i] - lo) / (hi - lo);
      out << format_double(x) << ',' << format_double(y) << ' ';
    }
    out << "\"/>\n";
    out << "<text x=\"" << width - margin + 4 << "\" y=\"" << margin + 16 * ci
        << "\" font-size=\"10\" fill=\"" << color << "\" text-anchor=\"end\">" << name
        << "</text>\n";
    ++ci;
  }
  out << "</svg>\n";
  write_file_atomic(path, out.str());
}

void write_group_charts(const std::string& dir, const std::vector<GroupSummary>& groups) {
  std::filesystem::create_directories(dir);
  for (const auto& g : groups) {
    std::string name = g.key.label();
    std::replace(name.begin(), name.end(), '/', '_');
    write_line_chart_svg(dir + "/" + name + ".svg", g.key.label(),
                         {{"per_round_mean", g.per_round_means}, {"lowess", g.lowess_curve}});
  }
}

}  // namespace delusim::analysis
