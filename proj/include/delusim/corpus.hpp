#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

namespace delusim::corpus {

struct Post {
  std::string post_id;
  std::string author_id;
  std::string community;
  std::int64_t created_at = 0;
  std::string body;
};

enum class Cohort { Treatment, Control, Unassigned };

struct UserRecord {
  std::string user_id;
  std::vector<Post> posts;  // sorted ascending by created_at
  Cohort cohort = Cohort::Unassigned;
};

struct CohortSpec {
  std::set<std::string> treatment_communities;
  std::set<std::string> control_communities;
  std::set<std::string> exclusion_communities;
  int min_treatment_posts = 100;

  void validate() const;
};

enum class CorpusFormat { Jsonl, Csv };

struct IngestResult {
  std::vector<Post> posts;  // file order, deduplicated by post_id (first wins)
  std::size_t skipped = 0;  // malformed records
  std::size_t duplicates = 0;
};

IngestResult ingest_posts(const std::string& path, CorpusFormat format);

struct Cohorts {
  std::vector<UserRecord> treatment;
  std::vector<UserRecord> control;
};

// Treatment: >= min_treatment_posts posts inside treatment communities.
// Control: >=1 post in a control community and zero posts in treatment or
// exclusion communities. Each record carries the user's full post history.
Cohorts build_cohorts(const std::vector<Post>& posts, const CohortSpec& spec);

}  // namespace delusim::corpus
