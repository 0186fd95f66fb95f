#include "delusim/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <unordered_set>

#include "delusim/common.hpp"
#include "json.hpp"

namespace delusim::corpus {

using nlohmann::json;

void CohortSpec::validate() const {
  if (min_treatment_posts < 1) throw ConfigError("min_treatment_posts must be >= 1");
  for (const auto& c : treatment_communities) {
    if (control_communities.count(c))
      throw ConfigError("community in both treatment and control sets: " + c);
  }
}

namespace {

bool trimmed_empty(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

std::optional<Post> post_from_json(const json& j) {
  if (!j.is_object()) return std::nullopt;
  Post p;
  auto get_str = [&](const char* key, std::string& out) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) return false;
    out = it->get<std::string>();
    return true;
  };
  if (!get_str("post_id", p.post_id) || !get_str("author_id", p.author_id) ||
      !get_str("community", p.community) || !get_str("body", p.body))
    return std::nullopt;
  auto it = j.find("created_at");
  if (it == j.end() || !it->is_number_integer()) return std::nullopt;
  p.created_at = it->get<std::int64_t>();
  if (p.created_at < 0 || trimmed_empty(p.body)) return std::nullopt;
  return p;
}

// RFC-4180: quoted fields may contain commas, newlines, and doubled quotes.
std::vector<std::vector<std::string>> parse_csv(const std::string& content) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  std::size_t i = 0;
  auto end_field = [&] { row.push_back(std::move(field)); field.clear(); };
  auto end_row = [&] {
    end_field();
    rows.push_back(std::move(row));
    row.clear();
  };
  while (i < content.size()) {
    char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      end_row();
    } else if (c != '\r') {
      field.push_back(c);
    }
    ++i;
  }
  if (!field.empty() || !row.empty()) end_row();
  return rows;
}

}  // namespace

IngestResult ingest_posts(const std::string& path, CorpusFormat format) {
  std::string content = read_file(path);
  IngestResult result;
  std::unordered_set<std::string> seen_ids;

  auto accept = [&](std::optional<Post> p) {
    if (!p) {
      ++result.skipped;
      return;
    }
    if (!seen_ids.insert(p->post_id).second) {
      ++result.duplicates;
      return;
    }
    result.posts.push_back(std::move(*p));
  };

  if (format == CorpusFormat::Jsonl) {
    std::size_t start = 0;
    while (start <= content.size()) {
      std::size_t nl = content.find('\n', start);
      std::string line = content.substr(start, nl == std::string::npos ? nl : nl - start);
      start = nl == std::string::npos ? content.size() + 1 : nl + 1;
      if (trimmed_empty(line)) continue;
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded()) {
        ++result.skipped;
        continue;
      }
      accept(post_from_json(j));
    }
  } else {
    auto rows = parse_csv(content);
    if (rows.empty()) return result;
    std::map<std::string, std::size_t> col;
    for (std::size_t c = 0; c < rows[0].size(); ++c) col[rows[0][c]] = c;
    for (const char* name : {"post_id", "author_id", "community", "created_at", "body"})
      if (!col.count(name)) throw ConfigError("csv missing required column: " + std::string(name));
    for (std::size_t r = 1; r < rows.size(); ++r) {
      const auto& cells = rows[r];
      if (cells.size() < col.size()) {
        ++result.skipped;
        continue;
      }
      Post p;
      p.post_id = cells[col["post_id"]];
      p.author_id = cells[col["author_id"]];
      p.community = cells[col["community"]];
      p.body = cells[col["body"]];
      try {
        p.created_at = std::stoll(cells[col["created_at"]]);
      } catch (const std::exception&) {
        ++result.skipped;
        continue;
      }
      if (p.created_at < 0 || trimmed_empty(p.body) || p.post_id.empty()) {
        ++result.skipped;
        continue;
      }
      accept(p);
    }
  }
  return result;
}

Cohorts build_cohorts(const std::vector<Post>& posts, const CohortSpec& spec) {
  spec.validate();
  // std::map keeps user order deterministic across runs.
  std::map<std::string, std::vector<Post>> by_user;
  for (const auto& p : posts) by_user[p.author_id].push_back(p);

  Cohorts out;
  for (auto& [user_id, user_posts] : by_user) {
    int n_treat = 0;
    bool any_control = false, any_excluded = false;
    for (const auto& p : user_posts) {
      if (spec.treatment_communities.count(p.community)) ++n_treat;
      if (spec.control_communities.count(p.community)) any_control = true;
      if (spec.exclusion_communities.count(p.community)) any_excluded = true;
    }
    UserRecord rec;
    rec.user_id = user_id;
    rec.posts = user_posts;
    std::stable_sort(rec.posts.begin(), rec.posts.end(),
                     [](const Post& a, const Post& b) { return a.created_at < b.created_at; });
    if (n_treat >= spec.min_treatment_posts) {
      rec.cohort = Cohort::Treatment;
      out.treatment.push_back(std::move(rec));
    } else if (any_control && n_treat == 0 && !any_excluded) {
      rec.cohort = Cohort::Control;
      out.control.push_back(std::move(rec));
    }
  }
  return out;
}

}  // namespace delusim::corpus
