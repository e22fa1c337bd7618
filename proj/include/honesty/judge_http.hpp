#pragma once

#include <cstdlib>
#include <memory>
#include <stdexcept>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "honesty/judge.hpp"

namespace honesty {

/// Endpoint settings for a chat-completion service. No vendor is
/// hard-wired: base URL, path, and model come from config; the auth token
/// comes from an environment variable.
struct HttpJudgeConfig {
  std::string base_url;                 // e.g. https://api.example.com
  std::string path = "/v1/chat/completions";
  std::string model;
  std::string api_key_env = "HONESTY_JUDGE_API_KEY";
  int timeout_seconds = 60;

  static HttpJudgeConfig from_json(const nlohmann::json& j) {
    HttpJudgeConfig c;
    c.base_url = j.at("base_url").get<std::string>();
    c.path = j.value("path", c.path);
    c.model = j.at("model").get<std::string>();
    c.api_key_env = j.value("api_key_env", c.api_key_env);
    c.timeout_seconds = j.value("timeout_seconds", c.timeout_seconds);
    return c;
  }
};

/// HTTPS chat-completion transport. A fresh connection per request keeps
/// concurrent complete() calls safe.
class HttpTransport : public ChatTransport {
 public:
  explicit HttpTransport(HttpJudgeConfig config) : config_(std::move(config)) {
    if (const char* key = std::getenv(config_.api_key_env.c_str())) token_ = key;
  }

  std::string complete(const std::vector<ChatMessage>& messages, double temperature) override {
    nlohmann::ordered_json body;
    body["model"] = config_.model;
    body["temperature"] = temperature;
    auto& msgs = body["messages"] = nlohmann::ordered_json::array();
    for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});

    httplib::Client client(config_.base_url);
    client.set_read_timeout(config_.timeout_seconds, 0);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    httplib::Headers headers;
    if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);

    auto res = client.Post(config_.path, headers, body.dump(), "application/json");
    if (!res) throw TransportError("no response from " + config_.base_url);
    if (res->status != 200) {
      throw TransportError("HTTP " + std::to_string(res->status) + ": " + res->body);
    }
    try {
      auto j = nlohmann::json::parse(res->body);
      return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const std::exception& e) {
      throw TransportError(std::string("unexpected completion payload: ") + e.what());
    }
  }

 private:
  HttpJudgeConfig config_;
  std::string token_;
};

inline std::shared_ptr<ChatTransport> make_http_transport(const HttpJudgeConfig& config) {
  return std::make_shared<HttpTransport>(config);
}

}  // namespace honesty
