#include "delusim/covariates.hpp"

#include "delusim/common.hpp"

namespace delusim::features {

CovariateVector user_covariates(const corpus::UserRecord& user, const Lexicon& lexicon,
                                EmbeddingProvider& provider) {
  if (user.posts.empty()) throw ConfigError("user has zero posts: " + user.user_id);

  CovariateVector cv;
  cv.user_id = user.user_id;
  cv.post_count = user.posts.size();

  std::vector<std::string> bodies;
  bodies.reserve(user.posts.size());
  for (const auto& p : user.posts) bodies.push_back(p.body);

  // Token-weighted mean of per-post proportions = pooled hit count over
  // pooled token count.
  std::vector<double> props(lexicon.categories.size(), 0.0);
  double total_tokens = 0.0;
  for (const auto& body : bodies) {
    auto tokens = tokenize(body);
    auto per_post = lexicon_scores_tokens(tokens, lexicon);
    double w = static_cast<double>(tokens.size());
    for (std::size_t c = 0; c < props.size(); ++c) props[c] += per_post[c] * w;
    total_tokens += w;
  }
  if (total_tokens > 0.0)
    for (double& p : props) p /= total_tokens;
  cv.lexicon_props = std::move(props);

  auto embeddings = provider.embed(bodies);
  std::vector<double> mean(provider.config().dimension, 0.0);
  for (const auto& e : embeddings)
    for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += e[j];
  for (double& x : mean) x /= static_cast<double>(embeddings.size());
  l2_normalize(mean);
  double norm = 0.0;
  for (double x : mean) norm += x * x;
  cv.zero_embedding = norm == 0.0;
  cv.embedding = std::move(mean);
  return cv;
}

std::vector<double> covariate_matrix(const std::vector<CovariateVector>& rows,
                                     std::size_t& dim_out) {
  if (rows.empty()) {
    dim_out = 0;
    return {};
  }
  dim_out = 1 + rows[0].lexicon_props.size() + rows[0].embedding.size();
  std::vector<double> m;
  m.reserve(rows.size() * dim_out);
  for (const auto& r : rows) {
    m.push_back(static_cast<double>(r.post_count));
    m.insert(m.end(), r.lexicon_props.begin(), r.lexicon_props.end());
    m.insert(m.end(), r.embedding.begin(), r.embedding.end());
  }
  return m;
}

}  // namespace delusim::features
