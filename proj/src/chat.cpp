#include "delusim/chat.hpp"

#include <cstdlib>
#include <sstream>
#include <thread>

#include "delusim/common.hpp"
#include "httplib.h"

namespace delusim::chat {

using nlohmann::json;

const char* role_name(Role role) {
  switch (role) {
    case Role::System:
      return "system";
    case Role::User:
      return "user";
    case Role::Assistant:
      return "assistant";
  }
  return "user";
}

json build_request(const std::string& model, const std::vector<ChatMessage>& messages) {
  json req = {{"model", model}, {"messages", json::array()}};
  for (const auto& m : messages) {
    if (m.content.empty()) throw ConfigError("chat message with empty content");
    req["messages"].push_back({{"role", role_name(m.role)}, {"content", m.content}});
  }
  return req;
}

RateLimiter::RateLimiter(double per_minute) {
  if (per_minute <= 0.0) throw ConfigError("rate limit must be positive");
  min_interval_ = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
      std::chrono::duration<double>(60.0 / per_minute));
  next_allowed_ = std::chrono::steady_clock::now();
}

void RateLimiter::acquire() {
  std::unique_lock lock(mutex_);
  auto now = std::chrono::steady_clock::now();
  if (now < next_allowed_) {
    auto wait_until = next_allowed_;
    next_allowed_ += min_interval_;
    lock.unlock();
    std::this_thread::sleep_until(wait_until);
    return;
  }
  next_allowed_ = now + min_interval_;
}

struct HttpChatBackend::Impl {
  std::unique_ptr<httplib::Client> client;
  std::string path = "/v1/chat/completions";
};

HttpChatBackend::HttpChatBackend(LlmEndpoint endpoint)
    : endpoint_(std::move(endpoint)),
      limiter_(endpoint_.rate_limit_per_min),
      impl_(std::make_unique<Impl>()) {
  std::string url = endpoint_.base_url;
  auto scheme_end = url.find("://");
  auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  std::string base = url;
  if (path_start != std::string::npos) {
    base = url.substr(0, path_start);
    if (path_start + 1 < url.size()) impl_->path = url.substr(path_start);
  }
  impl_->client = std::make_unique<httplib::Client>(base);
  impl_->client->set_read_timeout(static_cast<int>(endpoint_.timeout_s), 0);
}

HttpChatBackend::~HttpChatBackend() = default;

std::string HttpChatBackend::complete(const json& request) {
  httplib::Headers headers;
  if (!endpoint_.auth_env_var.empty()) {
    if (const char* token = std::getenv(endpoint_.auth_env_var.c_str()))
      headers.emplace("Authorization", std::string("Bearer ") + token);
  }
  std::string body = request.dump();
  double backoff = endpoint_.backoff_initial_s;
  for (int attempt = 0;; ++attempt) {
    limiter_.acquire();
    auto res = impl_->client->Post(impl_->path, headers, body, "application/json");
    if (res && res->status == 200) {
      json parsed = json::parse(res->body, nullptr, false);
      if (!parsed.is_discarded() && parsed.contains("choices") && !parsed["choices"].empty()) {
        return parsed["choices"][0].at("message").at("content").get<std::string>();
      }
      throw TransportError("malformed chat completion response from " + endpoint_.base_url);
    }
    if (attempt >= endpoint_.max_retries) {
      std::ostringstream msg;
      msg << "chat request to " << endpoint_.base_url << " failed after "
          << (attempt + 1) << " attempts";
      if (res) msg << " (last status " << res->status << ")";
      throw TransportError(msg.str());
    }
    std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
    backoff *= 2.0;
  }
}

MockChatBackend::MockChatBackend(std::vector<std::string> scripted_replies)
    : scripted_(std::move(scripted_replies)) {}

MockChatBackend::MockChatBackend(Responder responder) : responder_(std::move(responder)) {}

std::string MockChatBackend::complete(const json& request) {
  std::lock_guard lock(mutex_);
  requests_.push_back(request);
  if (responder_) return responder_(request);
  if (next_ >= scripted_.size())
    throw TransportError("mock script exhausted after " + std::to_string(next_) + " replies");
  return scripted_[next_++];
}

std::vector<std::string> load_mock_script(const std::string& path, const std::string& role) {
  std::istringstream in(read_file(path));
  std::vector<std::string> replies;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    if (j.at("role").get<std::string>() == role)
      replies.push_back(j.at("content").get<std::string>());
  }
  return replies;
}

}  // namespace delusim::chat
