#include "delusim/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "delusim/common.hpp"
#include "json.hpp"

namespace delusim::simulate {

using nlohmann::json;

std::string Persona::system_prompt() const {
  std::ostringstream out;
  out << style_instruction;
  for (std::size_t i = 0; i < exemplars.size(); ++i)
    out << "\n" << (i + 1) << ". " << exemplars[i].body;
  return out.str();
}

Persona build_persona(const corpus::UserRecord& user, std::size_t n, std::uint64_t seed) {
  if (user.posts.size() < 2)
    throw ConfigError("cannot build persona for user with <2 posts: " + user.user_id);
  Persona p;
  p.user_id = user.user_id;
  p.sampling_seed = seed;

  std::size_t take = std::min(n, user.posts.size());
  std::vector<std::size_t> idx(user.posts.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  // partial Fisher-Yates: uniform sample without replacement
  for (std::size_t i = 0; i < take; ++i) {
    std::size_t j =
        i + static_cast<std::size_t>(next_unit(rng) * static_cast<double>(idx.size() - i));
    j = std::min(j, idx.size() - 1);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(take);
  std::sort(idx.begin(), idx.end());  // keep exemplars in chronological order
  for (std::size_t i : idx) p.exemplars.push_back(user.posts[i]);
  return p;
}

std::string choose_seed_post(const corpus::UserRecord& user, const Persona& persona) {
  std::set<std::string> exemplar_ids;
  for (const auto& e : persona.exemplars) exemplar_ids.insert(e.post_id);
  for (auto it = user.posts.rbegin(); it != user.posts.rend(); ++it)
    if (!exemplar_ids.count(it->post_id)) return it->body;
  return user.posts.back().body;
}

void InterventionConfig::validate() const {
  auto first = tmpl.find("{score}");
  if (first == std::string::npos || tmpl.find("{score}", first + 1) != std::string::npos)
    throw ConfigError("intervention template must contain exactly one {score} placeholder");
}

std::string InterventionConfig::render(double score) const {
  validate();
  std::ostringstream num;
  num.setf(std::ios::fixed);
  num.precision(score_precision);
  num << score;
  std::string out = tmpl;
  out.replace(out.find("{score}"), 7, num.str());
  return out;
}

int count_sentences(const std::string& text) {
  int count = 0;
  bool in_terminator = false;
  bool any_content = false;
  for (char c : text) {
    bool term = c == '.' || c == '!' || c == '?';
    if (term && !in_terminator && any_content) ++count;
    in_terminator = term;
    if (!term && !std::isspace(static_cast<unsigned char>(c))) any_content = true;
  }
  // trailing clause without terminator
  std::size_t last_non_space = text.find_last_not_of(" \t\n\r");
  if (last_non_space != std::string::npos) {
    char c = text[last_non_space];
    if (c != '.' && c != '!' && c != '?') ++count;
  }
  return count;
}

std::string simuser_reply(const Persona& persona, const std::vector<chat::ChatMessage>& history,
                          chat::ChatBackend& backend, const std::string& model) {
  if (history.empty() || history.back().role != chat::Role::Assistant)
    throw ConfigError("simuser_reply requires history ending with an assistant message");
  std::vector<chat::ChatMessage> messages;
  messages.push_back({chat::Role::System, persona.system_prompt()});
  messages.insert(messages.end(), history.begin(), history.end());
  return backend.complete(chat::build_request(model, messages));
}

std::string assistant_reply(const std::vector<chat::ChatMessage>& history,
                            chat::ChatBackend& backend, const std::string& model,
                            const InterventionConfig& intervention,
                            std::optional<double> latest_score) {
  if (history.empty() || history.back().role != chat::Role::User)
    throw ConfigError("assistant_reply requires history ending with a user message");
  std::vector<chat::ChatMessage> messages;
  if (intervention.enabled) {
    bool opening = history.size() == 1;
    if (!latest_score) {
      if (!opening)
        throw AnalysisError("intervention requires a score before each non-opening turn");
    } else {
      messages.push_back({chat::Role::System, intervention.render(*latest_score)});
    }
  }
  messages.insert(messages.end(), history.begin(), history.end());
  return backend.complete(chat::build_request(model, messages));
}

namespace {

const char* condition_name(Condition c) {
  return c == Condition::Standard ? "standard" : "intervention";
}
const char* speaker_name(Speaker s) { return s == Speaker::SimUser ? "simuser" : "assistant"; }
const char* status_name(TranscriptStatus s) {
  switch (s) {
    case TranscriptStatus::Complete:
      return "complete";
    case TranscriptStatus::Truncated:
      return "truncated";
    case TranscriptStatus::Failed:
      return "failed";
  }
  return "failed";
}

}  // namespace

std::string Transcript::to_json() const {
  json j = {
      {"conversation_id", conversation_id},
      {"user_id", user_id},
      {"stratum", stratum},
      {"condition", condition_name(condition)},
      {"assistant_model", assistant_model},
      {"simuser_model", simuser_model},
      {"seed_post", seed_post},
      {"status", status_name(status)},
      {"turns", json::array()},
  };
  if (!failure_reason.empty()) j["failure_reason"] = failure_reason;
  for (const auto& t : turns) {
    json tj = {{"turn_index", t.turn_index},
               {"speaker", speaker_name(t.speaker)},
               {"text", t.text}};
    if (t.score) tj["score"] = *t.score;
    if (t.flagged_long) tj["flagged_long"] = true;
    j["turns"].push_back(std::move(tj));
  }
  return j.dump(2);
}

Transcript Transcript::from_json(const std::string& json_text) {
  json j = json::parse(json_text);
  Transcript tr;
  tr.conversation_id = j.at("conversation_id").get<std::string>();
  tr.user_id = j.at("user_id").get<std::string>();
  tr.stratum = j.value("stratum", -1);
  tr.condition = j.at("condition").get<std::string>() == "intervention" ? Condition::Intervention
                                                                        : Condition::Standard;
  tr.assistant_model = j.at("assistant_model").get<std::string>();
  tr.simuser_model = j.at("simuser_model").get<std::string>();
  tr.seed_post = j.at("seed_post").get<std::string>();
  std::string st = j.at("status").get<std::string>();
  tr.status = st == "complete" ? TranscriptStatus::Complete
              : st == "failed" ? TranscriptStatus::Failed
                               : TranscriptStatus::Truncated;
  tr.failure_reason = j.value("failure_reason", "");
  for (const auto& tj : j.at("turns")) {
    Turn t;
    t.turn_index = tj.at("turn_index").get<int>();
    t.speaker = tj.at("speaker").get<std::string>() == "simuser" ? Speaker::SimUser
                                                                 : Speaker::Assistant;
    t.text = tj.at("text").get<std::string>();
    if (tj.contains("score")) t.score = tj["score"].get<double>();
    t.flagged_long = tj.value("flagged_long", false);
    tr.turns.push_back(std::move(t));
  }
  return tr;
}

void Transcript::save(const std::string& path) const { write_file_atomic(path, to_json()); }

Transcript Transcript::load(const std::string& path) { return from_json(read_file(path)); }

Transcript run_conversation(const ConversationSetup& setup) {
  if (setup.seed_post.empty()) throw ConfigError("seed post must be non-empty");
  if (setup.intervention.enabled && (!setup.score_model || !setup.provider))
    throw ConfigError("intervention requires a scorer model and embedding provider");
  setup.intervention.validate();

  Transcript tr;
  tr.conversation_id = setup.conversation_id;
  tr.user_id = setup.persona.user_id;
  tr.stratum = setup.stratum;
  tr.condition = setup.intervention.enabled ? Condition::Intervention : Condition::Standard;
  tr.assistant_model = setup.assistant_model;
  tr.simuser_model = setup.simuser_model;
  tr.seed_post = setup.seed_post;
  tr.status = TranscriptStatus::Truncated;

  auto persist = [&] {
    if (!setup.persist_path.empty()) tr.save(setup.persist_path);
  };
  persist();

  std::vector<chat::ChatMessage> history;
  history.push_back({chat::Role::User, setup.seed_post});
  std::optional<double> latest_score;
  int turn_index = 0;

  try {
    for (int round = 0; round < setup.rounds; ++round) {
      std::string a_text = assistant_reply(history, *setup.assistant_backend,
                                           setup.assistant_model, setup.intervention,
                                           latest_score);
      history.push_back({chat::Role::Assistant, a_text});
      tr.turns.push_back({turn_index++, Speaker::Assistant, a_text, std::nullopt, false});
      persist();

      std::string u_text =
          simuser_reply(setup.persona, history, *setup.simuser_backend, setup.simuser_model);
      history.push_back({chat::Role::User, u_text});
      Turn ut{turn_index++, Speaker::SimUser, u_text, std::nullopt,
              count_sentences(u_text) > 3};
      if (setup.intervention.enabled) {
        double score = scorer::delusion_score(*setup.score_model, *setup.provider, u_text);
        ut.score = score;
        latest_score = score;
      }
      tr.turns.push_back(std::move(ut));
      persist();
    }
    tr.status = TranscriptStatus::Complete;
  } catch (const TransportError& e) {
    tr.status = TranscriptStatus::Truncated;
    tr.failure_reason = e.what();
  }
  persist();
  return tr;
}

std::vector<Transcript> run_conversations(const std::vector<ConversationSetup>& setups,
                                          int concurrency) {
  std::vector<Transcript> out(setups.size());
  concurrency = std::max(1, concurrency);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= setups.size()) return;
      out[i] = run_conversation(setups[i]);
    }
  };
  std::vector<std::thread> threads;
  for (int t = 0; t < concurrency; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  return out;
}

void score_transcript(Transcript& transcript, const scorer::ScorerModel& model,
                      features::EmbeddingProvider& provider) {
  std::vector<std::size_t> pending;
  std::vector<std::string> texts;
  for (std::size_t i = 0; i < transcript.turns.size(); ++i) {
    auto& t = transcript.turns[i];
    if (t.speaker == Speaker::SimUser && !t.score) {
      pending.push_back(i);
      texts.push_back(t.text);
    }
  }
  if (pending.empty()) return;
  auto scores = scorer::delusion_scores(model, provider, texts);
  for (std::size_t k = 0; k < pending.size(); ++k)
    transcript.turns[pending[k]].score = scores[k];
}

}  // namespace delusim::simulate
