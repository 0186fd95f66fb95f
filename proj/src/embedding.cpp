#include "delusim/embedding.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include "delusim/common.hpp"
#include "httplib.h"
#include "json.hpp"

namespace delusim::features {

using nlohmann::json;
namespace fs = std::filesystem;

void EmbeddingProviderConfig::validate() const {
  if (dimension == 0) throw ConfigError("embedding dimension must be positive");
  if (max_batch == 0) throw ConfigError("embedding max_batch must be positive");
  if (kind == ProviderKind::Remote && endpoint_url.empty())
    throw ConfigError("remote embedding provider requires endpoint_url");
}

std::string EmbeddingProviderConfig::fingerprint() const {
  std::string id = (kind == ProviderKind::Remote ? "remote:" : "hashing:");
  id += model_name + ":" + std::to_string(dimension);
  return sha256_hex(id);
}

void l2_normalize(std::vector<double>& v) {
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm > 0.0)
    for (double& x : v) x /= norm;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

EmbeddingProvider::EmbeddingProvider(EmbeddingProviderConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  fingerprint_ = cfg_.fingerprint();
  if (!cfg_.cache_path.empty()) fs::create_directories(cfg_.cache_path);
}

std::vector<double> EmbeddingProvider::hash_embed(const std::string& text) const {
  std::vector<double> v(cfg_.dimension, 0.0);
  auto tokens = tokenize(text);
  auto add = [&](std::uint64_t h) {
    std::size_t bucket = h % cfg_.dimension;
    double sign = ((h >> 32) & 1) ? 1.0 : -1.0;
    v[bucket] += sign;
  };
  std::uint64_t salt = fnv1a64(cfg_.model_name);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    add(fnv1a64(tokens[i], salt));
    if (i + 1 < tokens.size()) add(fnv1a64(tokens[i + 1], fnv1a64(tokens[i], salt ^ 0x5bd1e995)));
  }
  l2_normalize(v);
  return v;
}

std::string EmbeddingProvider::cache_file(const std::string& text) const {
  return (fs::path(cfg_.cache_path) / (sha256_hex(fingerprint_ + "\x00" + text) + ".vec")).string();
}

bool EmbeddingProvider::cache_read(const std::string& text, std::vector<double>& out) const {
  if (cfg_.cache_path.empty()) return false;
  std::ifstream in(cache_file(text), std::ios::binary);
  if (!in) return false;
  out.assign(cfg_.dimension, 0.0);
  in.read(reinterpret_cast<char*>(out.data()),
          static_cast<std::streamsize>(cfg_.dimension * sizeof(double)));
  return static_cast<std::size_t>(in.gcount()) == cfg_.dimension * sizeof(double);
}

void EmbeddingProvider::cache_write(const std::string& text, const std::vector<double>& vec) {
  if (cfg_.cache_path.empty()) return;
  std::lock_guard lock(write_mutex_);
  std::string path = cache_file(text);
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(vec.data()),
              static_cast<std::streamsize>(vec.size() * sizeof(double)));
  }
  fs::rename(tmp, path);
}

std::vector<std::vector<double>> EmbeddingProvider::remote_embed(
    const std::vector<std::string>& texts) {
  // Split endpoint_url into host part and request path.
  std::string url = cfg_.endpoint_url;
  std::string path = "/v1/embeddings";
  auto scheme_end = url.find("://");
  auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  std::string base = url;
  if (path_start != std::string::npos) {
    base = url.substr(0, path_start);
    if (path_start + 1 < url.size()) path = url.substr(path_start);
  }
  httplib::Client client(base);
  client.set_read_timeout(static_cast<int>(cfg_.request_timeout_s), 0);
  const char* token = std::getenv("DELUSIM_EMBED_TOKEN");

  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (std::size_t start = 0; start < texts.size(); start += cfg_.max_batch) {
    std::size_t end = std::min(texts.size(), start + cfg_.max_batch);
    json req = {{"model", cfg_.model_name}, {"input", json::array()}};
    for (std::size_t i = start; i < end; ++i) req["input"].push_back(texts[i]);

    httplib::Headers headers;
    if (token) headers.emplace("Authorization", std::string("Bearer ") + token);

    httplib::Result res;
    for (int attempt = 0;; ++attempt) {
      res = client.Post(path, headers, req.dump(), "application/json");
      ++remote_requests_;
      if (res && res->status == 200) break;
      if (attempt >= cfg_.max_retries)
        throw TransportError("embedding request failed for batch starting at index " +
                             std::to_string(start));
      std::this_thread::sleep_for(
          std::chrono::milliseconds(static_cast<int>(200 * (1 << attempt))));
    }

    json body = json::parse(res->body, nullptr, false);
    if (body.is_discarded() || !body.contains("data"))
      throw TransportError("malformed embedding response for batch at index " +
                           std::to_string(start));
    std::vector<std::vector<double>> batch(end - start);
    for (const auto& item : body["data"]) {
      std::size_t idx = item.at("index").get<std::size_t>();
      auto vec = item.at("embedding").get<std::vector<double>>();
      if (vec.size() != cfg_.dimension)
        throw ConfigError("embedding dimension mismatch: server returned " +
                          std::to_string(vec.size()) + ", configured " +
                          std::to_string(cfg_.dimension));
      l2_normalize(vec);
      if (idx >= batch.size()) throw TransportError("embedding response index out of range");
      batch[idx] = std::move(vec);
    }
    for (auto& v : batch) out.push_back(std::move(v));
  }
  return out;
}

std::vector<std::vector<double>> EmbeddingProvider::embed(const std::vector<std::string>& texts) {
  if (texts.empty()) throw ConfigError("embed requires a non-empty text list");
  std::vector<std::vector<double>> out(texts.size());
  std::vector<std::size_t> misses;
  for (std::size_t i = 0; i < texts.size(); ++i)
    if (!cache_read(texts[i], out[i])) misses.push_back(i);

  if (!misses.empty()) {
    if (cfg_.kind == ProviderKind::Hashing) {
#pragma omp parallel for schedule(static)
      for (std::int64_t m = 0; m < static_cast<std::int64_t>(misses.size()); ++m) {
        std::size_t i = misses[static_cast<std::size_t>(m)];
        out[i] = hash_embed(texts[i]);
      }
    } else {
      std::vector<std::string> miss_texts;
      miss_texts.reserve(misses.size());
      for (std::size_t i : misses) miss_texts.push_back(texts[i]);
      auto vecs = remote_embed(miss_texts);
      for (std::size_t m = 0; m < misses.size(); ++m) out[misses[m]] = std::move(vecs[m]);
    }
    for (std::size_t i : misses) cache_write(texts[i], out[i]);
  }
  return out;
}

std::vector<double> EmbeddingProvider::embed_one(const std::string& text) {
  return embed({text})[0];
}

}  // namespace delusim::features
