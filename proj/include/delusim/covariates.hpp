#pragma once

#include <string>
#include <vector>

#include "delusim/corpus.hpp"
#include "delusim/embedding.hpp"
#include "delusim/lexicon.hpp"

namespace delusim::features {

struct CovariateVector {
  std::string user_id;
  std::size_t post_count = 0;
  std::vector<double> lexicon_props;  // length = |categories|, each in [0,1]
  std::vector<double> embedding;      // unit norm (zero only for empty text, flagged)
  bool zero_embedding = false;
};

// post_count = |posts|; lexicon_props = token-weighted mean of per-post
// scores; embedding = L2-normalized mean of per-post embeddings.
CovariateVector user_covariates(const corpus::UserRecord& user, const Lexicon& lexicon,
                                EmbeddingProvider& provider);

// Flattened covariate matrix [post_count, lexicon..., embedding...], row per
// user, for the matching module.
std::vector<double> covariate_matrix(const std::vector<CovariateVector>& rows,
                                     std::size_t& dim_out);

}  // namespace delusim::features
