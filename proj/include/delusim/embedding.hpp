#pragma once

#include <cstddef>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace delusim::features {

enum class ProviderKind { Remote, Hashing };

struct EmbeddingProviderConfig {
  ProviderKind kind = ProviderKind::Hashing;
  std::string endpoint_url;           // remote only
  std::string model_name = "hashing-v1";
  std::size_t dimension = 384;        // fixed for the lifetime of a run
  std::string cache_path;             // directory; empty disables caching
  double request_timeout_s = 30.0;
  std::size_t max_batch = 64;
  int max_retries = 3;

  void validate() const;
  // Identity of (kind, model, dimension); stored in scorer models to detect
  // feature drift across runs.
  std::string fingerprint() const;
};

// Order-preserving batch embedding with an on-disk cache keyed by
// (provider fingerprint, text). Hashing kind is a deterministic token
// n-gram feature hash; remote kind speaks the OpenAI embeddings shape.
class EmbeddingProvider {
 public:
  explicit EmbeddingProvider(EmbeddingProviderConfig cfg);

  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts);
  std::vector<double> embed_one(const std::string& text);

  const EmbeddingProviderConfig& config() const { return cfg_; }
  std::size_t remote_requests() const { return remote_requests_; }

 private:
  std::vector<double> hash_embed(const std::string& text) const;
  std::vector<std::vector<double>> remote_embed(const std::vector<std::string>& texts);
  bool cache_read(const std::string& text, std::vector<double>& out) const;
  void cache_write(const std::string& text, const std::vector<double>& vec);
  std::string cache_file(const std::string& text) const;

  EmbeddingProviderConfig cfg_;
  std::string fingerprint_;
  std::size_t remote_requests_ = 0;
  std::mutex write_mutex_;
};

void l2_normalize(std::vector<double>& v);
double cosine(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace delusim::features
