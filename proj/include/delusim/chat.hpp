#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "json.hpp"

namespace delusim::chat {

enum class Role { System, User, Assistant };

const char* role_name(Role role);

struct ChatMessage {
  Role role = Role::User;
  std::string content;  // non-empty
};

struct LlmEndpoint {
  std::string base_url;
  std::string model_name;
  std::string auth_env_var;  // bearer token source
  int max_retries = 3;
  double backoff_initial_s = 0.5;  // doubled per retry
  double rate_limit_per_min = 600.0;
  double timeout_s = 60.0;
};

// OpenAI-compatible chat body. Deliberately carries no decoding parameters
// (no temperature / top_p); provider defaults apply.
nlohmann::json build_request(const std::string& model, const std::vector<ChatMessage>& messages);

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  // Takes the full wire request body, returns the assistant message content.
  virtual std::string complete(const nlohmann::json& request) = 0;
};

// Token-bucket style limiter: serializes acquisition so the request rate
// never exceeds the configured per-minute limit.
class RateLimiter {
 public:
  explicit RateLimiter(double per_minute);
  void acquire();

 private:
  std::chrono::steady_clock::duration min_interval_;
  std::chrono::steady_clock::time_point next_allowed_;
  std::mutex mutex_;
};

class HttpChatBackend : public ChatBackend {
 public:
  explicit HttpChatBackend(LlmEndpoint endpoint);
  ~HttpChatBackend() override;
  std::string complete(const nlohmann::json& request) override;

 private:
  LlmEndpoint endpoint_;
  RateLimiter limiter_;
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Test double: replays a fixed reply sequence or calls a responder, and
// records every request body it receives.
class MockChatBackend : public ChatBackend {
 public:
  using Responder = std::function<std::string(const nlohmann::json&)>;

  explicit MockChatBackend(std::vector<std::string> scripted_replies);
  explicit MockChatBackend(Responder responder);

  std::string complete(const nlohmann::json& request) override;

  const std::vector<nlohmann::json>& requests() const { return requests_; }

 private:
  std::vector<std::string> scripted_;
  std::size_t next_ = 0;
  Responder responder_;
  std::vector<nlohmann::json> requests_;
  std::mutex mutex_;
};

// Applies a shared rate limiter in front of any backend.
class ThrottledBackend : public ChatBackend {
 public:
  ThrottledBackend(std::shared_ptr<ChatBackend> inner, std::shared_ptr<RateLimiter> limiter)
      : inner_(std::move(inner)), limiter_(std::move(limiter)) {}
  std::string complete(const nlohmann::json& request) override {
    limiter_->acquire();
    return inner_->complete(request);
  }

 private:
  std::shared_ptr<ChatBackend> inner_;
  std::shared_ptr<RateLimiter> limiter_;
};

// Mock script fixture: JSONL of {"role": "assistant"|"simuser", "content": str}
// in reply order; returns the reply sequence for the requested role.
std::vector<std::string> load_mock_script(const std::string& path, const std::string& role);

}  // namespace delusim::chat
