#include "delusim/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "delusim/analysis.hpp"
#include "delusim/common.hpp"
#include "delusim/covariates.hpp"
#include "delusim/matching.hpp"
#include "delusim/mockllm.hpp"
#include "delusim/themes.hpp"
#include "json.hpp"

namespace delusim::pipeline {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct StageContext {
  const config::RunConfig& cfg;
  Manifest manifest;
  StageRecord record;

  explicit StageContext(const config::RunConfig& c) : cfg(c), manifest(c.output_dir) {
    manifest.set_config_snapshot(c.snapshot_json());
  }

  fs::path path(const std::string& rel) const { return fs::path(cfg.output_dir) / rel; }

  void require(const std::string& stage) const {
    if (!manifest.stage_ok(stage))
      throw DependencyError("stage requires '" + stage + "' to have completed; run it first");
  }

  void add_output(const std::string& rel) {
    record.outputs[rel] = manifest.hash_output_file(rel);
  }

  void warn(const std::string& msg) { record.warnings.push_back(msg); }

  std::string input_hash(const std::string& stage, const std::vector<std::string>& deps) const {
    std::string acc = cfg.snapshot_json() + "|" + stage;
    for (const auto& d : deps) {
      const StageRecord* rec = manifest.stage(d);
      if (rec)
        for (const auto& [file, hash] : rec->outputs) acc += "|" + file + ":" + hash;
    }
    return sha256_hex(acc);
  }

  // True when the stage already ran with identical inputs (no-op rerun).
  bool cache_hit(const std::string& stage, const std::string& hash) {
    const StageRecord* rec = manifest.stage(stage);
    if (rec && rec->status == "ok" && rec->input_hash == hash) {
      StageRecord updated = *rec;
      updated.cache_hit = true;
      manifest.record_stage(stage, std::move(updated));
      return true;
    }
    return false;
  }
};

features::EmbeddingProviderConfig provider_config(const config::RunConfig& cfg) {
  features::EmbeddingProviderConfig ec = cfg.embedding;
  if (ec.cache_path.empty())
    ec.cache_path = (fs::path(cfg.output_dir) / "embed_cache").string();
  return ec;
}

// ---- intermediate artifact helpers ----

json post_to_json(const corpus::Post& p) {
  return {{"post_id", p.post_id},
          {"author_id", p.author_id},
          {"community", p.community},
          {"created_at", p.created_at},
          {"body", p.body}};
}

corpus::Post post_from_json(const json& j) {
  return {j.at("post_id").get<std::string>(), j.at("author_id").get<std::string>(),
          j.at("community").get<std::string>(), j.at("created_at").get<std::int64_t>(),
          j.at("body").get<std::string>()};
}

struct StoredUser {
  corpus::UserRecord record;
  std::string cohort;  // "treatment" / "control"
};

std::vector<StoredUser> load_users(const StageContext& ctx) {
  std::istringstream in(read_file(ctx.path("users.jsonl").string()));
  std::vector<StoredUser> users;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    StoredUser u;
    u.record.user_id = j.at("user_id").get<std::string>();
    u.cohort = j.at("cohort").get<std::string>();
    u.record.cohort =
        u.cohort == "treatment" ? corpus::Cohort::Treatment : corpus::Cohort::Control;
    for (const auto& pj : j.at("posts")) u.record.posts.push_back(post_from_json(pj));
    users.push_back(std::move(u));
  }
  return users;
}

struct MatchArtifact {
  int best_k = 0;
  std::vector<std::string> user_ids;  // aligned with assignment/labels
  std::vector<int> labels;
  std::vector<int> assignment;
  std::set<int> pruned;
};

MatchArtifact load_match(const StageContext& ctx) {
  json j = json::parse(read_file(ctx.path("matching.json").string()));
  MatchArtifact m;
  m.best_k = j.at("best_k").get<int>();
  m.user_ids = j.at("user_ids").get<std::vector<std::string>>();
  m.labels = j.at("labels").get<std::vector<int>>();
  m.assignment = j.at("assignment").get<std::vector<int>>();
  for (int p : j.at("pruned").get<std::vector<int>>()) m.pruned.insert(p);
  return m;
}

struct IndexEntry {
  std::string conversation_id;
  std::string file;
  std::string user_id;
  std::string cohort;
  std::string condition;
  std::string model;
  std::string status;
};

std::vector<IndexEntry> load_sim_index(const StageContext& ctx) {
  std::istringstream in(read_file(ctx.path("simulate_index.jsonl").string()));
  std::vector<IndexEntry> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    entries.push_back({j.at("conversation_id"), j.at("file"), j.at("user_id"), j.at("cohort"),
                       j.at("condition"), j.at("model"), j.at("status")});
  }
  return entries;
}

// ---- stages ----

void stage_ingest(StageContext& ctx) {
  if (ctx.cfg.corpus_paths.empty()) throw ConfigError("no corpus paths configured");
  std::vector<corpus::Post> all;
  std::size_t skipped = 0, duplicates = 0;
  for (const auto& path : ctx.cfg.corpus_paths) {
    auto res = corpus::ingest_posts(path, ctx.cfg.corpus_format);
    skipped += res.skipped;
    duplicates += res.duplicates;
    for (auto& p : res.posts) all.push_back(std::move(p));
  }
  std::ostringstream out;
  for (const auto& p : all) out << post_to_json(p).dump() << '\n';
  write_file_atomic(ctx.path("posts.jsonl").string(), out.str());
  json stats = {{"count", all.size()}, {"skipped", skipped}, {"duplicates", duplicates}};
  write_file_atomic(ctx.path("ingest_stats.json").string(), stats.dump(2));
  if (skipped) ctx.warn(std::to_string(skipped) + " malformed records skipped");
  ctx.add_output("posts.jsonl");
  ctx.add_output("ingest_stats.json");
}

void stage_cohorts(StageContext& ctx) {
  ctx.require("ingest");
  std::vector<corpus::Post> posts;
  {
    std::istringstream in(read_file(ctx.path("posts.jsonl").string()));
    std::string line;
    while (std::getline(in, line))
      if (!line.empty()) posts.push_back(post_from_json(json::parse(line)));
  }
  auto cohorts = corpus::build_cohorts(posts, ctx.cfg.cohort_spec);
  std::ostringstream out;
  auto dump_user = [&](const corpus::UserRecord& u, const char* cohort) {
    json j = {{"user_id", u.user_id}, {"cohort", cohort}, {"posts", json::array()}};
    for (const auto& p : u.posts) j["posts"].push_back(post_to_json(p));
    out << j.dump() << '\n';
  };
  for (const auto& u : cohorts.treatment) dump_user(u, "treatment");
  for (const auto& u : cohorts.control) dump_user(u, "control");
  write_file_atomic(ctx.path("users.jsonl").string(), out.str());
  json stats = {{"treatment", cohorts.treatment.size()}, {"control", cohorts.control.size()}};
  write_file_atomic(ctx.path("cohort_stats.json").string(), stats.dump(2));
  ctx.add_output("users.jsonl");
  ctx.add_output("cohort_stats.json");
}

void stage_covariates(StageContext& ctx) {
  ctx.require("cohorts");
  if (ctx.cfg.lexicon_path.empty()) throw ConfigError("lexicon.path is required for covariates");
  auto lexicon = features::Lexicon::load(ctx.cfg.lexicon_path);
  features::EmbeddingProvider provider(provider_config(ctx.cfg));
  auto users = load_users(ctx);

  json out = {{"dim", 0}, {"users", json::array()}};
  std::size_t dim = 0;
  for (const auto& u : users) {
    auto cv = features::user_covariates(u.record, lexicon, provider);
    if (cv.zero_embedding) ctx.warn("zero embedding for user " + u.record.user_id);
    json j = {{"user_id", cv.user_id},
              {"cohort", u.cohort},
              {"post_count", cv.post_count},
              {"lexicon_props", cv.lexicon_props},
              {"embedding", cv.embedding}};
    out["users"].push_back(std::move(j));
    dim = 1 + cv.lexicon_props.size() + cv.embedding.size();
  }
  out["dim"] = dim;
  write_file_atomic(ctx.path("covariates.json").string(), out.dump());
  ctx.add_output("covariates.json");
}

void stage_match(StageContext& ctx) {
  ctx.require("covariates");
  json cov = json::parse(read_file(ctx.path("covariates.json").string()));
  std::size_t d = cov.at("dim").get<std::size_t>();
  std::vector<std::string> user_ids;
  std::vector<int> labels;
  std::vector<double> x;
  for (const auto& uj : cov.at("users")) {
    user_ids.push_back(uj.at("user_id").get<std::string>());
    labels.push_back(uj.at("cohort").get<std::string>() == "treatment" ? 1 : 0);
    x.push_back(uj.at("post_count").get<double>());
    for (double v : uj.at("lexicon_props")) x.push_back(v);
    for (double v : uj.at("embedding")) x.push_back(v);
  }
  std::size_t n = user_ids.size();
  if (n * d != x.size()) throw AnalysisError("covariate matrix shape mismatch");

  auto sweep = matching::sweep_and_select(x, n, d, labels, ctx.cfg.k_min, ctx.cfg.k_max,
                                          ctx.cfg.l2_lambda, ctx.cfg.max_iter);
  auto pruned = matching::prune_strata(sweep.stratifications.at(sweep.best_k), labels,
                                       ctx.cfg.min_per_group);
  const auto& best = sweep.reports.at(sweep.best_k);
  if (!best.passes_threshold())
    ctx.warn("matched mean SMD " + analysis::format_double(best.mean_abs_smd_after) +
             " fails the <0.25 balance gate");

  json out = {{"best_k", sweep.best_k},
              {"user_ids", user_ids},
              {"labels", labels},
              {"scores", sweep.scores},
              {"assignment", pruned.assignment},
              {"boundaries", pruned.boundaries},
              {"pruned", std::vector<int>(pruned.pruned.begin(), pruned.pruned.end())},
              {"mean_abs_smd_before", best.mean_abs_smd_before},
              {"mean_abs_smd_after", best.mean_abs_smd_after},
              {"passes_smd_threshold", best.passes_threshold()},
              {"per_k", json::object()}};
  for (const auto& [k, rep] : sweep.reports)
    out["per_k"][std::to_string(k)] = {{"mean_abs_smd_before", rep.mean_abs_smd_before},
                                       {"mean_abs_smd_after", rep.mean_abs_smd_after}};
  write_file_atomic(ctx.path("matching.json").string(), out.dump(2));

  std::ostringstream csv;
  csv << "k,covariate,smd_before,smd_after\n";
  for (const auto& [k, rep] : sweep.reports)
    for (std::size_t j = 0; j < rep.per_covariate_smd_after.size(); ++j)
      csv << k << ',' << j << ',' << analysis::format_double(rep.per_covariate_smd_before[j])
          << ',' << analysis::format_double(rep.per_covariate_smd_after[j]) << '\n';
  write_file_atomic(ctx.path("balance_report.csv").string(), csv.str());
  ctx.add_output("matching.json");
  ctx.add_output("balance_report.csv");
}

void stage_train_scorer(StageContext& ctx) {
  if (ctx.cfg.labeled_path.empty())
    throw ConfigError("scorer.labeled_path is required for train-scorer");
  auto corpus = scorer::load_labeled_jsonl(ctx.cfg.labeled_path);
  std::uint64_t seed = derive_seed(ctx.cfg.seed, "scorer");
  auto split = scorer::split_corpus(corpus, ctx.cfg.test_fraction, seed);
  features::EmbeddingProvider provider(provider_config(ctx.cfg));
  auto model = scorer::train_scorer(split.train, provider, ctx.cfg.scorer_l2);
  model.meta.seed = seed;
  model.meta.test_fraction = ctx.cfg.test_fraction;
  model.save(ctx.path("scorer_model.json").string());
  // persist the held-out set so eval-scorer sees the same split
  std::ostringstream out;
  for (const auto& p : split.test)
    out << json{{"text", p.text},
                {"label", p.label == scorer::Label::Delusional ? "delusional" : "non_delusional"},
                {"community", p.source_community}}
               .dump()
        << '\n';
  write_file_atomic(ctx.path("scorer_test_split.jsonl").string(), out.str());
  ctx.add_output("scorer_model.json");
  ctx.add_output("scorer_test_split.jsonl");
}

void stage_eval_scorer(StageContext& ctx) {
  ctx.require("train-scorer");
  auto model = scorer::ScorerModel::load(ctx.path("scorer_model.json").string());
  auto test = scorer::load_labeled_jsonl(ctx.path("scorer_test_split.jsonl").string());
  features::EmbeddingProvider provider(provider_config(ctx.cfg));
  auto metrics = scorer::evaluate_scorer(model, provider, test, ctx.cfg.threshold);
  json out = {{"balanced_accuracy", metrics.balanced_accuracy},
              {"f1", metrics.f1},
              {"precision", metrics.precision},
              {"recall", metrics.recall},
              {"threshold", ctx.cfg.threshold},
              {"confusion",
               {{"tp", metrics.confusion[0][0]},
                {"fn", metrics.confusion[0][1]},
                {"fp", metrics.confusion[1][0]},
                {"tn", metrics.confusion[1][1]}}}};
  write_file_atomic(ctx.path("scorer_eval.json").string(), out.dump(2));
  ctx.add_output("scorer_eval.json");
}

void stage_simulate(StageContext& ctx) {
  ctx.require("match");
  if (ctx.cfg.intervention_enabled) ctx.require("train-scorer");

  auto users = load_users(ctx);
  auto match = load_match(ctx);
  std::map<std::string, std::pair<int, int>> strata;  // user -> (stratum, label)
  for (std::size_t i = 0; i < match.user_ids.size(); ++i)
    strata[match.user_ids[i]] = {match.assignment[i], match.labels[i]};

  std::optional<scorer::ScorerModel> score_model;
  std::optional<features::EmbeddingProvider> provider;
  if (ctx.cfg.intervention_enabled) {
    score_model = scorer::ScorerModel::load(ctx.path("scorer_model.json").string());
    provider.emplace(provider_config(ctx.cfg));
  }

  // Backends: mock responders are stateless, shareable across conversations.
  std::shared_ptr<chat::ChatBackend> assistant, simuser_escalating, simuser_neutral;
  if (ctx.cfg.assistant_kind == "mock-adaptive") {
    assistant = mockllm::make_adaptive_assistant();
  } else if (ctx.cfg.assistant_kind == "mock-amplifier") {
    assistant = mockllm::make_amplifier_assistant();
  } else if (ctx.cfg.assistant_kind == "http") {
    chat::LlmEndpoint ep;
    ep.base_url = ctx.cfg.assistant_url;
    ep.model_name = ctx.cfg.assistant_models.empty() ? "" : ctx.cfg.assistant_models[0];
    ep.auth_env_var = "DELUSIM_CHAT_TOKEN";
    ep.rate_limit_per_min = ctx.cfg.rate_limit_per_min;
    ep.max_retries = ctx.cfg.max_retries;
    assistant = std::make_shared<chat::HttpChatBackend>(ep);
  } else {
    throw ConfigError("unknown assistant_kind: " + ctx.cfg.assistant_kind);
  }
  if (ctx.cfg.simuser_kind == "mock-auto") {
    simuser_escalating = mockllm::make_escalating_simuser();
    simuser_neutral = mockllm::make_neutral_simuser();
  } else if (ctx.cfg.simuser_kind == "http") {
    chat::LlmEndpoint ep;
    ep.base_url = ctx.cfg.simuser_url;
    ep.model_name = ctx.cfg.simuser_model;
    ep.auth_env_var = "DELUSIM_CHAT_TOKEN";
    ep.rate_limit_per_min = ctx.cfg.rate_limit_per_min;
    ep.max_retries = ctx.cfg.max_retries;
    simuser_escalating = simuser_neutral = std::make_shared<chat::HttpChatBackend>(ep);
  } else {
    throw ConfigError("unknown simuser_kind: " + ctx.cfg.simuser_kind);
  }

  fs::create_directories(ctx.path("transcripts"));
  std::vector<simulate::ConversationSetup> setups;
  std::vector<IndexEntry> index;
  std::map<std::string, std::size_t> per_cohort;

  for (const auto& u : users) {
    auto it = strata.find(u.record.user_id);
    if (it == strata.end()) continue;
    auto [stratum, label] = it->second;
    if (match.pruned.count(stratum)) continue;
    if (u.record.posts.size() < 2) {
      ctx.warn("user " + u.record.user_id + " skipped: fewer than 2 posts");
      continue;
    }
    auto& count = per_cohort[u.cohort];
    if (ctx.cfg.max_users_per_cohort && count >= ctx.cfg.max_users_per_cohort) continue;
    ++count;

    std::uint64_t user_seed = derive_seed(ctx.cfg.seed, "persona:" + u.record.user_id);
    auto persona = simulate::build_persona(u.record, ctx.cfg.persona_exemplars, user_seed);
    std::string seed_post = simulate::choose_seed_post(u.record, persona);

    std::vector<simulate::Condition> conditions = {simulate::Condition::Standard};
    if (ctx.cfg.intervention_enabled && label == 1)
      conditions.push_back(simulate::Condition::Intervention);

    for (const auto& model_name : ctx.cfg.assistant_models) {
      for (auto condition : conditions) {
        for (int rep = 0; rep < ctx.cfg.conversations_per_user; ++rep) {
          simulate::ConversationSetup s;
          s.persona = persona;
          s.seed_post = seed_post;
          s.assistant_backend = assistant.get();
          s.simuser_backend =
              (label == 1 ? simuser_escalating : simuser_neutral).get();
          s.assistant_model = model_name;
          s.simuser_model = ctx.cfg.simuser_model;
          s.rounds = ctx.cfg.rounds;
          s.stratum = stratum;
          if (condition == simulate::Condition::Intervention) {
            s.intervention = ctx.cfg.intervention;
            s.intervention.enabled = true;
            s.score_model = &*score_model;
            s.provider = &*provider;
          }
          s.conversation_id = u.cohort + "_" + u.record.user_id + "_" + model_name + "_" +
                              (condition == simulate::Condition::Standard ? "standard"
                                                                          : "intervention") +
                              "_" + std::to_string(rep);
          std::string file = "transcripts/" + s.conversation_id + ".json";
          s.persist_path = ctx.path(file).string();
          index.push_back({s.conversation_id, file, u.record.user_id, u.cohort,
                           condition == simulate::Condition::Standard ? "standard"
                                                                      : "intervention",
                           model_name, "pending"});
          setups.push_back(std::move(s));
        }
      }
    }
  }

  // Resume: completed transcripts from a previous partial run are kept.
  std::vector<simulate::ConversationSetup> to_run;
  std::vector<std::size_t> to_run_idx;
  for (std::size_t i = 0; i < setups.size(); ++i) {
    if (fs::exists(setups[i].persist_path)) {
      auto existing = simulate::Transcript::load(setups[i].persist_path);
      if (existing.status == simulate::TranscriptStatus::Complete) {
        index[i].status = "complete";
        continue;
      }
    }
    to_run.push_back(setups[i]);
    to_run_idx.push_back(i);
  }
  auto transcripts = simulate::run_conversations(to_run, ctx.cfg.concurrency);
  for (std::size_t j = 0; j < transcripts.size(); ++j)
    index[to_run_idx[j]].status =
        transcripts[j].status == simulate::TranscriptStatus::Complete ? "complete" : "truncated";

  std::ostringstream out;
  for (const auto& e : index)
    out << json{{"conversation_id", e.conversation_id}, {"file", e.file},
                {"user_id", e.user_id},         {"cohort", e.cohort},
                {"condition", e.condition},     {"model", e.model},
                {"status", e.status}}
               .dump()
        << '\n';
  write_file_atomic(ctx.path("simulate_index.jsonl").string(), out.str());
  ctx.add_output("simulate_index.jsonl");
  for (const auto& e : index) ctx.add_output(e.file);
}

void stage_score(StageContext& ctx) {
  ctx.require("simulate");
  ctx.require("train-scorer");
  auto model = scorer::ScorerModel::load(ctx.path("scorer_model.json").string());
  features::EmbeddingProvider provider(provider_config(ctx.cfg));
  auto index = load_sim_index(ctx);
  std::size_t scored = 0;
  for (const auto& e : index) {
    auto tr = simulate::Transcript::load(ctx.path(e.file).string());
    simulate::score_transcript(tr, model, provider);
    tr.save(ctx.path(e.file).string());
    ctx.add_output(e.file);
    ++scored;
  }
  json stats = {{"transcripts_scored", scored}};
  write_file_atomic(ctx.path("score_stats.json").string(), stats.dump(2));
  ctx.add_output("score_stats.json");
}

void stage_analyze(StageContext& ctx) {
  ctx.require("score");
  auto index = load_sim_index(ctx);
  std::vector<analysis::Trajectory> trajectories;
  std::map<std::string, std::vector<std::string>> generated_per_user;  // standard cond.
  std::size_t truncated = 0;
  for (const auto& e : index) {
    auto tr = simulate::Transcript::load(ctx.path(e.file).string());
    if (tr.status != simulate::TranscriptStatus::Complete) {
      ++truncated;
      continue;
    }
    trajectories.push_back(analysis::trajectory_from(tr, e.cohort));
    if (tr.condition == simulate::Condition::Standard)
      for (const auto& t : tr.turns)
        if (t.speaker == simulate::Speaker::SimUser)
          generated_per_user[e.user_id].push_back(t.text);
  }
  if (trajectories.empty()) throw AnalysisError("no complete scored transcripts to analyze");
  if (truncated) ctx.warn(std::to_string(truncated) + " truncated transcripts excluded");

  auto groups = analysis::summarize_groups(trajectories, ctx.cfg.lowess_frac,
                                           ctx.cfg.robust_iters, true);
  analysis::write_group_summaries_csv(ctx.path("group_summaries.csv").string(), groups);
  analysis::write_per_round_means_csv(ctx.path("per_round_means.csv").string(), groups);
  analysis::write_effects_csv(ctx.path("effects.csv").string(),
                              analysis::treatment_control_effects(trajectories));

  // SimUser fidelity: generated texts vs own and random same-stratum users.
  auto users = load_users(ctx);
  auto match = load_match(ctx);
  std::map<std::string, int> stratum_of;
  for (std::size_t i = 0; i < match.user_ids.size(); ++i)
    stratum_of[match.user_ids[i]] = match.assignment[i];
  auto lexicon = features::Lexicon::load(ctx.cfg.lexicon_path);
  std::vector<analysis::FidelityInput> fid_inputs;
  for (const auto& u : users) {
    auto git = generated_per_user.find(u.record.user_id);
    auto sit = stratum_of.find(u.record.user_id);
    if (git == generated_per_user.end() || sit == stratum_of.end()) continue;
    analysis::FidelityInput fi;
    fi.user_id = u.record.user_id;
    fi.stratum = sit->second;
    for (const auto& p : u.record.posts) fi.own_texts.push_back(p.body);
    fi.generated_texts = git->second;
    fid_inputs.push_back(std::move(fi));
  }
  auto fidelity = analysis::fidelity_eval(fid_inputs, lexicon, derive_seed(ctx.cfg.seed, "fidelity"));
  for (int s : fidelity.skipped_strata)
    ctx.warn("fidelity: stratum " + std::to_string(s) + " skipped (too few users)");
  analysis::write_fidelity_csv(ctx.path("fidelity.csv").string(), fidelity);

  ctx.add_output("group_summaries.csv");
  ctx.add_output("per_round_means.csv");
  ctx.add_output("effects.csv");
  ctx.add_output("fidelity.csv");
}

void stage_themes(StageContext& ctx) {
  ctx.require("score");
  auto index = load_sim_index(ctx);
  std::vector<std::string> texts;
  std::vector<themes::ScoredTurn> turns;
  for (const auto& e : index) {
    auto tr = simulate::Transcript::load(ctx.path(e.file).string());
    if (tr.status != simulate::TranscriptStatus::Complete) continue;
    int round = 0;
    for (const auto& t : tr.turns) {
      if (t.speaker != simulate::Speaker::SimUser) continue;
      texts.push_back(t.text);
      turns.push_back({e.cohort, tr.condition, e.model, round++, t.score.value_or(0.0), 0});
    }
  }
  if (texts.size() < 4) throw AnalysisError("too few scored turns for theme modeling");

  features::EmbeddingProvider provider(provider_config(ctx.cfg));
  auto embeddings = provider.embed(texts);
  int k_max = std::min<int>(ctx.cfg.themes_k_max, static_cast<int>(texts.size()));
  auto sel = themes::select_k(embeddings, texts, ctx.cfg.themes_k_min, k_max,
                              derive_seed(ctx.cfg.seed, "themes"), ctx.cfg.coherence_window,
                              ctx.cfg.top_n_keywords);
  for (std::size_t i = 0; i < turns.size(); ++i)
    turns[i].theme = sel.model.clustering.assignment[i];

  std::ostringstream coh;
  coh << "k,c_v\n";
  for (const auto& [k, score] : sel.report.per_k)
    coh << k << ',' << analysis::format_double(score) << '\n';
  write_file_atomic(ctx.path("coherence.csv").string(), coh.str());

  std::vector<std::size_t> sizes(sel.report.selected_k, 0);
  for (int a : sel.model.clustering.assignment) ++sizes[a];
  std::ostringstream th;
  th << "theme,size,keywords\n";
  for (int c = 0; c < sel.report.selected_k; ++c) {
    th << c << ',' << sizes[c] << ',' << '"';
    for (std::size_t i = 0; i < sel.model.keywords[c].size(); ++i) {
      if (i) th << ' ';
      th << sel.model.keywords[c][i].term;
    }
    th << '"' << '\n';
  }
  write_file_atomic(ctx.path("themes.csv").string(), th.str());

  auto trends = themes::theme_trends(turns, sel.model.keywords);
  std::ostringstream tt;
  tt << "theme,cell,slope\n";
  for (const auto& trend : trends) {
    for (const auto& [label, slope] : trend.slopes)
      tt << trend.theme << ',' << label << ',' << analysis::format_double(slope) << '\n';
    for (const auto& label : trend.flagged_cells)
      ctx.warn("theme " + std::to_string(trend.theme) + " cell " + label +
               " has <2 occupied rounds");
  }
  write_file_atomic(ctx.path("theme_trends.csv").string(), tt.str());

  ctx.add_output("coherence.csv");
  ctx.add_output("themes.csv");
  ctx.add_output("theme_trends.csv");
}

void stage_report(StageContext& ctx) {
  ctx.require("analyze");
  ctx.require("themes");
  // per-round means back from CSV -> figure-style charts
  std::istringstream in(read_file(ctx.path("per_round_means.csv").string()));
  std::string line;
  std::getline(in, line);  // header
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> series;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() < 7) continue;
    std::string key = cells[0] + "_" + cells[1] + "_" + cells[2] + "_s" + cells[3];
    series[key].first.push_back(std::stod(cells[5]));
    series[key].second.push_back(std::stod(cells[6]));
  }
  fs::create_directories(ctx.path("plots"));
  for (const auto& [key, pair] : series) {
    std::string rel = "plots/" + key + ".svg";
    analysis::write_line_chart_svg(ctx.path(rel).string(), key,
                                   {{"per_round_mean", pair.first}, {"lowess", pair.second}});
    ctx.add_output(rel);
  }
  // coherence-vs-k curve
  {
    std::istringstream cin(read_file(ctx.path("coherence.csv").string()));
    std::getline(cin, line);
    std::vector<double> cv;
    while (std::getline(cin, line)) {
      auto comma = line.find(',');
      if (comma != std::string::npos) cv.push_back(std::stod(line.substr(comma + 1)));
    }
    analysis::write_line_chart_svg(ctx.path("plots/coherence.svg").string(),
                                   "topic coherence (c_v) vs k", {{"c_v", cv}});
    ctx.add_output("plots/coherence.svg");
  }
}

const std::map<std::string, std::vector<std::string>> kStageDeps = {
    {"ingest", {}},
    {"cohorts", {"ingest"}},
    {"covariates", {"cohorts"}},
    {"match", {"covariates"}},
    {"train-scorer", {}},
    {"eval-scorer", {"train-scorer"}},
    {"simulate", {"match", "train-scorer"}},
    {"score", {"simulate", "train-scorer"}},
    {"analyze", {"score"}},
    {"themes", {"score"}},
    {"report", {"analyze", "themes"}},
};

}  // namespace

void run_stage(const std::string& stage, const config::RunConfig& cfg) {
  auto dep_it = kStageDeps.find(stage);
  if (dep_it == kStageDeps.end()) throw ConfigError("unknown stage: " + stage);

  StageContext ctx(cfg);
  std::string hash = ctx.input_hash(stage, dep_it->second);
  if (ctx.cache_hit(stage, hash)) return;

  auto start = std::chrono::steady_clock::now();
  ctx.record.input_hash = hash;
  try {
    if (stage == "ingest") stage_ingest(ctx);
    else if (stage == "cohorts") stage_cohorts(ctx);
    else if (stage == "covariates") stage_covariates(ctx);
    else if (stage == "match") stage_match(ctx);
    else if (stage == "train-scorer") stage_train_scorer(ctx);
    else if (stage == "eval-scorer") stage_eval_scorer(ctx);
    else if (stage == "simulate") stage_simulate(ctx);
    else if (stage == "score") stage_score(ctx);
    else if (stage == "analyze") stage_analyze(ctx);
    else if (stage == "themes") stage_themes(ctx);
    else if (stage == "report") stage_report(ctx);
    ctx.record.status = "ok";
  } catch (...) {
    ctx.record.status = "failed";
    ctx.record.duration_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    ctx.manifest.record_stage(stage, std::move(ctx.record));
    throw;
  }
  ctx.record.duration_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ctx.manifest.record_stage(stage, std::move(ctx.record));
}

void run_all(const config::RunConfig& cfg) {
  for (const auto& stage : kStageOrder) run_stage(stage, cfg);
}

}  // namespace delusim::pipeline
