#pragma once

#include <cstdio>
#include <fstream>
#include <memory>
#include <mutex>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sasmate/agent/backend.hpp"
#include "sasmate/error.hpp"

namespace sasmate::agent {

/// Deterministic stand-in for a chat model, driven by a scenario document:
///
///   {"name": "...",
///    "rules": [{"agent": "sld", "match": "dimethyl", "replies": [
///                 {"tool_calls": [{"name": "tool_sld", "arguments": {...}}]},
///                 {"content": "SLD = {{result:/sld_real|%.3f}}"}]}]}
///
/// The first rule whose agent equals the request's agent (or "*") and whose
/// regex (case-insensitive) matches the last user message is used. The reply
/// index is the number of assistant messages after that user message; once
/// the list is exhausted the last reply repeats.
///
/// Placeholders, in content and in string tool arguments:
///   {{latest_file}}         id of the most recently uploaded file
///   {{result:/ptr|fmt}}     JSON pointer into the latest tool result,
///                           numbers printed with the optional printf format
/// A string argument that is exactly one placeholder is replaced by the raw
/// JSON value, so numbers stay numbers.
class ScriptedBackend : public ChatBackend {
 public:
  explicit ScriptedBackend(json scenario) : scenario_(std::move(scenario)) {
    if (!scenario_.is_object() || !scenario_.contains("rules") || !scenario_.at("rules").is_array())
      throw Error(ErrorCode::InvalidScenario, "scenario needs a \"rules\" array");
    for (const auto& rule : scenario_.at("rules")) {
      if (!rule.contains("agent") || !rule.contains("replies") || !rule.at("replies").is_array() ||
          rule.at("replies").empty())
        throw Error(ErrorCode::InvalidScenario, "each rule needs \"agent\" and a non-empty \"replies\" array");
      Rule r;
      r.agent = rule.at("agent").get<std::string>();
      r.pattern = rule.value("match", "");
      try {
        r.regex = std::regex(r.pattern, std::regex::ECMAScript | std::regex::icase);
      } catch (const std::regex_error& e) {
        throw Error(ErrorCode::InvalidScenario, "bad regex '" + r.pattern + "': " + e.what());
      }
      r.replies = rule.at("replies");
      rules_.push_back(std::move(r));
    }
  }

  static std::shared_ptr<ScriptedBackend> from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::InvalidScenario, "cannot open scenario file " + path);
    json j = json::parse(in, nullptr, false, true);
    if (j.is_discarded()) throw Error(ErrorCode::InvalidScenario, "scenario file " + path + " is not valid JSON");
    return std::make_shared<ScriptedBackend>(std::move(j));
  }

  std::string kind() const override { return "scripted"; }

  Message complete(const ChatRequest& request) override {
    {
      std::lock_guard lock(mu_);
      requests_.push_back(request);
    }
    std::size_t last_user = request.messages.size();
    for (std::size_t i = request.messages.size(); i-- > 0;) {
      if (request.messages[i].role == Role::User) {
        last_user = i;
        break;
      }
    }
    if (last_user == request.messages.size())
      throw Error(ErrorCode::BackendError, "scripted backend: request has no user message");
    const std::string& user_text = request.messages[last_user].content;
    std::size_t step = 0;
    for (std::size_t i = last_user + 1; i < request.messages.size(); ++i)
      if (request.messages[i].role == Role::Assistant) ++step;

    for (const auto& rule : rules_) {
      if (rule.agent != "*" && rule.agent != request.agent) continue;
      if (!rule.pattern.empty() && !std::regex_search(user_text, rule.regex)) continue;
      const json& reply = rule.replies.at(std::min(step, rule.replies.size() - 1));
      return render(reply, request, step);
    }
    throw Error(ErrorCode::BackendError, "scripted backend: no rule for agent '" + request.agent + "'");
  }

  std::vector<ChatRequest> requests() const {
    std::lock_guard lock(mu_);
    return requests_;
  }

 private:
  struct Rule {
    std::string agent;
    std::string pattern;
    std::regex regex;
    json replies;
  };

  static json latest_tool_result(const ChatRequest& request) {
    for (std::size_t i = request.messages.size(); i-- > 0;) {
      if (request.messages[i].role == Role::Tool) {
        json j = json::parse(request.messages[i].content, nullptr, false);
        return j.is_discarded() ? json(request.messages[i].content) : j;
      }
    }
    return json();
  }

  static json resolve(const std::string& token, const ChatRequest& request) {
    if (token == "latest_file") {
      const json files = request.context.value("files", json::array());
      return files.empty() ? json("") : files.back();
    }
    if (token.rfind("result:", 0) == 0) {
      std::string ptr = token.substr(7);
      std::string fmt;
      if (auto bar = ptr.find('|'); bar != std::string::npos) {
        fmt = ptr.substr(bar + 1);
        ptr = ptr.substr(0, bar);
      }
      const json result = latest_tool_result(request);
      json value;
      try {
        value = result.at(json::json_pointer(ptr));
      } catch (const std::exception&) {
        return json("(unavailable)");
      }
      if (!fmt.empty() && value.is_number()) {
        static const std::regex numeric_format(R"(%[-+ #0]*[0-9]{0,2}(\.[0-9]{1,2})?[eEfgG])");
        if (!std::regex_match(fmt, numeric_format))
          throw Error(ErrorCode::InvalidScenario, "placeholder format '" + fmt + "' is not a numeric printf format");
        char buf[64];
        std::snprintf(buf, sizeof buf, fmt.c_str(), value.get<double>());
        return json(std::string(buf));
      }
      return value;
    }
    return json("{{" + token + "}}");
  }

  static std::string as_text(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_float()) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.6g", v.get<double>());
      return buf;
    }
    return v.dump();
  }

  static json substitute(const std::string& text, const ChatRequest& request) {
    const auto open = text.find("{{");
    const auto close = text.find("}}");
    if (open == 0 && close == text.size() - 2 && text.find("{{", 2) == std::string::npos)
      return resolve(text.substr(2, text.size() - 4), request);
    std::string out;
    std::size_t pos = 0;
    while (true) {
      const auto a = text.find("{{", pos);
      if (a == std::string::npos) break;
      const auto b = text.find("}}", a + 2);
      if (b == std::string::npos) break;
      out += text.substr(pos, a - pos);
      out += as_text(resolve(text.substr(a + 2, b - a - 2), request));
      pos = b + 2;
    }
    out += text.substr(pos);
    return json(out);
  }

  static json substitute_all(const json& v, const ChatRequest& request) {
    if (v.is_string()) return substitute(v.get<std::string>(), request);
    if (v.is_object()) {
      json out = json::object();
      for (const auto& [k, x] : v.items()) out[k] = substitute_all(x, request);
      return out;
    }
    if (v.is_array()) {
      json out = json::array();
      for (const auto& x : v) out.push_back(substitute_all(x, request));
      return out;
    }
    return v;
  }

  static Message render(const json& reply, const ChatRequest& request, std::size_t step) {
    Message m = Message::assistant("");
    if (reply.contains("content")) m.content = as_text(substitute(reply.at("content").get<std::string>(), request));
    if (reply.contains("tool_calls")) {
      std::size_t i = 0;
      for (const auto& c : reply.at("tool_calls")) {
        ToolCall call;
        call.id = "call-" + std::to_string(step) + "-" + std::to_string(i++);
        call.name = c.at("name").get<std::string>();
        call.arguments = substitute_all(c.value("arguments", json::object()), request);
        m.tool_calls.push_back(std::move(call));
      }
    }
    return m;
  }

  json scenario_;
  std::vector<Rule> rules_;
  mutable std::mutex mu_;
  std::vector<ChatRequest> requests_;
};

}  // namespace sasmate::agent
