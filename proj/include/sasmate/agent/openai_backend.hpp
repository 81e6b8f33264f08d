#pragma once

#include <memory>
#include <string>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "sasmate/agent/backend.hpp"
#include "sasmate/agent/settings.hpp"
#include "sasmate/error.hpp"

namespace sasmate::agent {

/// OpenAI-compatible chat-completions client (OpenRouter by default). Model,
/// endpoint and key are read from the settings store on every call.
class OpenAiBackend : public ChatBackend {
 public:
  explicit OpenAiBackend(std::shared_ptr<const SettingsStore> settings, int timeout_seconds = 120)
      : settings_(std::move(settings)), timeout_seconds_(timeout_seconds) {}

  std::string kind() const override { return "openrouter"; }

  Message complete(const ChatRequest& request) override {
    const Settings s = settings_->snapshot();
    const std::string key = settings_->effective_api_key();
    if (key.empty())
      throw Error(ErrorCode::BackendError,
                  std::string("no API key configured (settings or ") + kApiKeyEnv + ")");

    json body = request.to_openai();
    if (request.model.empty()) body["model"] = s.model;

    httplib::Client client(s.endpoint);
    if (!client.is_valid()) throw Error(ErrorCode::BackendError, "invalid endpoint '" + s.endpoint + "'");
    client.set_connection_timeout(timeout_seconds_, 0);
    client.set_read_timeout(timeout_seconds_, 0);
    client.set_bearer_token_auth(key);
    auto res = client.Post(s.completions_path, body.dump(), "application/json");
    if (!res) throw Error(ErrorCode::BackendError, "request failed: " + httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300)
      throw Error(ErrorCode::BackendError, "HTTP " + std::to_string(res->status) + ": " + error_text(res->body));

    json reply = json::parse(res->body, nullptr, false);
    if (reply.is_discarded()) throw Error(ErrorCode::BackendError, "reply is not JSON");
    if (!reply.contains("choices") || !reply.at("choices").is_array() || reply.at("choices").empty())
      throw Error(ErrorCode::BackendError, "reply has no choices: " + error_text(res->body));
    const json& choice = reply.at("choices").at(0);
    if (!choice.contains("message")) throw Error(ErrorCode::BackendError, "choice has no message");
    try {
      return message_from_openai(choice.at("message"));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::BackendError, std::string("malformed message: ") + e.what());
    }
  }

 private:
  static std::string error_text(const std::string& body) {
    json j = json::parse(body, nullptr, false);
    if (!j.is_discarded() && j.contains("error")) {
      const json& e = j.at("error");
      if (e.is_object() && e.contains("message")) return e.at("message").dump();
      return e.dump();
    }
    return body.substr(0, 300);
  }

  std::shared_ptr<const SettingsStore> settings_;
  int timeout_seconds_;
};

}  // namespace sasmate::agent
