#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace delusim::features {

// LIWC-style category lexicon. Patterns are lowercase tokens; a trailing '*'
// matches any token with that prefix.
struct LexiconCategory {
  std::string name;
  std::vector<std::string> patterns;
};

struct Lexicon {
  std::vector<LexiconCategory> categories;  // order fixed; feature indices depend on it

  void validate() const;
  // %-delimited dictionary file, documented in docs/lexicon_format.md.
  static Lexicon load(const std::string& path);
  std::string serialize() const;
};

// proportion[c] = matching tokens / total tokens; empty text -> all zeros.
std::vector<double> lexicon_scores(std::string_view text, const Lexicon& lexicon);

// Same, over an already tokenized text (used by aggregation paths that need
// the token count too).
std::vector<double> lexicon_scores_tokens(const std::vector<std::string>& tokens,
                                          const Lexicon& lexicon);

}  // namespace delusim::features
