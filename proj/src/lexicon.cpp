#include "delusim/lexicon.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "delusim/common.hpp"

namespace delusim::features {

void Lexicon::validate() const {
  if (categories.empty()) throw ConfigError("lexicon must have at least one category");
  std::set<std::string> names;
  for (const auto& c : categories) {
    if (!names.insert(c.name).second)
      throw ConfigError("duplicate lexicon category name: " + c.name);
  }
}

Lexicon Lexicon::load(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  int percent_seen = 0;
  std::map<int, std::size_t> id_to_index;  // dictionary ids are arbitrary ints
  Lexicon lex;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t'))
      line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '%') {
      ++percent_seen;
      continue;
    }
    std::istringstream ls(line);
    if (percent_seen == 1) {
      int id;
      std::string name;
      if (!(ls >> id >> name)) throw ConfigError("bad lexicon header line: " + line);
      id_to_index[id] = lex.categories.size();
      lex.categories.push_back({name, {}});
    } else if (percent_seen >= 2) {
      std::string pattern;
      if (!(ls >> pattern)) continue;
      std::transform(pattern.begin(), pattern.end(), pattern.begin(),
                     [](unsigned char c) { return std::tolower(c); });
      int id;
      while (ls >> id) {
        auto it = id_to_index.find(id);
        if (it == id_to_index.end())
          throw ConfigError("lexicon entry references unknown category id: " + line);
        lex.categories[it->second].patterns.push_back(pattern);
      }
    }
  }
  if (percent_seen < 2) throw ConfigError("lexicon file missing %-delimited header: " + path);
  lex.validate();
  return lex;
}

std::string Lexicon::serialize() const {
  std::ostringstream out;
  out << "%\n";
  for (std::size_t i = 0; i < categories.size(); ++i)
    out << (i + 1) << '\t' << categories[i].name << '\n';
  out << "%\n";
  for (std::size_t i = 0; i < categories.size(); ++i)
    for (const auto& p : categories[i].patterns) out << p << '\t' << (i + 1) << '\n';
  return out.str();
}

namespace {

bool matches(const std::string& token, const std::string& pattern) {
  if (!pattern.empty() && pattern.back() == '*')
    return token.compare(0, pattern.size() - 1, pattern, 0, pattern.size() - 1) == 0;
  return token == pattern;
}

}  // namespace

std::vector<double> lexicon_scores_tokens(const std::vector<std::string>& tokens,
                                          const Lexicon& lexicon) {
  std::vector<double> props(lexicon.categories.size(), 0.0);
  if (tokens.empty()) return props;
  for (std::size_t c = 0; c < lexicon.categories.size(); ++c) {
    std::size_t hits = 0;
    for (const auto& tok : tokens) {
      for (const auto& pat : lexicon.categories[c].patterns) {
        if (matches(tok, pat)) {
          ++hits;
          break;
        }
      }
    }
    props[c] = static_cast<double>(hits) / static_cast<double>(tokens.size());
  }
  return props;
}

std::vector<double> lexicon_scores(std::string_view text, const Lexicon& lexicon) {
  return lexicon_scores_tokens(tokenize(text), lexicon);
}

}  // namespace delusim::features
