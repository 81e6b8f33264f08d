#pragma once

#include <cstdlib>
#include <mutex>
#include <string>
#include <vector>

namespace sasmate::agent {

inline constexpr const char* kApiKeyEnv = "OPENROUTER_API_KEY";
inline constexpr const char* kDefaultEndpoint = "https://openrouter.ai";
inline constexpr const char* kDefaultCompletionsPath = "/api/v1/chat/completions";
inline constexpr const char* kDefaultModel = "openai/gpt-4o-mini";

/// Models offered in the settings dropdown; any other string is accepted.
inline const std::vector<std::string>& suggested_models() {
  static const std::vector<std::string> models = {
      "openai/gpt-4o-mini",       "openai/gpt-4o",         "openai/gpt-5",
      "anthropic/claude-sonnet-4", "x-ai/grok-3",           "x-ai/grok-4",
      "google/gemini-2.5-pro",    "google/gemini-2.5-flash"};
  return models;
}

struct Settings {
  std::string backend = "scripted";  // "scripted" | "openrouter"
  std::string model = kDefaultModel;
  std::string endpoint = kDefaultEndpoint;
  std::string completions_path = kDefaultCompletionsPath;
  std::string api_key;  // write-only from the outside
};

/// Shared, thread-safe settings. The API key can be set but is only ever read
/// back by the HTTP backend.
class SettingsStore {
 public:
  SettingsStore() = default;
  explicit SettingsStore(Settings s) : settings_(std::move(s)) {}

  Settings snapshot() const {
    std::lock_guard lock(mu_);
    return settings_;
  }

  void set_model(std::string model) {
    std::lock_guard lock(mu_);
    settings_.model = std::move(model);
  }
  void set_endpoint(std::string endpoint) {
    std::lock_guard lock(mu_);
    settings_.endpoint = std::move(endpoint);
  }
  void set_api_key(std::string key) {
    std::lock_guard lock(mu_);
    settings_.api_key = std::move(key);
  }

  /// Key from settings, else from OPENROUTER_API_KEY.
  std::string effective_api_key() const {
    std::lock_guard lock(mu_);
    if (!settings_.api_key.empty()) return settings_.api_key;
    const char* env = std::getenv(kApiKeyEnv);
    return env ? std::string(env) : std::string();
  }

  bool has_api_key() const { return !effective_api_key().empty(); }

 private:
  mutable std::mutex mu_;
  Settings settings_;
};

}  // namespace sasmate::agent
