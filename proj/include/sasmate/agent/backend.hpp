#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sasmate/agent/messages.hpp"

namespace sasmate::agent {

/// One chat-completions call. `agent` and `context` are host-side metadata
/// and never go on the wire.
struct ChatRequest {
  std::string agent;
  std::string model;
  std::vector<Message> messages;
  std::vector<ToolSpec> tools;
  json context = json::object();  // {"files": [...], "plots": [...]}

  json to_openai() const {
    json body = {{"model", model}, {"messages", json::array()}};
    for (const auto& m : messages) body["messages"].push_back(agent::to_openai(m));
    if (!tools.empty()) {
      body["tools"] = json::array();
      for (const auto& t : tools) body["tools"].push_back(t.to_openai());
      body["tool_choice"] = "auto";
    }
    return body;
  }
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  /// Returns the assistant message; throws Error(BackendError) on failure.
  virtual Message complete(const ChatRequest& request) = 0;
  virtual std::string kind() const = 0;
};

}  // namespace sasmate::agent
