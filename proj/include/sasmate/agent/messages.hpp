#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sasmate/error.hpp"

namespace sasmate::agent {

using nlohmann::json;

enum class Role { System, User, Assistant, Tool };

inline std::string to_string(Role r) {
  switch (r) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
    case Role::Tool: return "tool";
  }
  return "user";
}

inline Role role_from_string(const std::string& s) {
  if (s == "system") return Role::System;
  if (s == "user") return Role::User;
  if (s == "assistant") return Role::Assistant;
  if (s == "tool") return Role::Tool;
  throw Error(ErrorCode::BackendError, "unknown message role '" + s + "'");
}

struct ToolCall {
  std::string id;
  std::string name;
  json arguments = json::object();
};

struct Message {
  Role role = Role::User;
  std::string content;
  std::vector<ToolCall> tool_calls;  // assistant only
  std::string tool_call_id;          // tool only

  static Message system(std::string text) { return {Role::System, std::move(text), {}, {}}; }
  static Message user(std::string text) { return {Role::User, std::move(text), {}, {}}; }
  static Message assistant(std::string text, std::vector<ToolCall> calls = {}) {
    return {Role::Assistant, std::move(text), std::move(calls), {}};
  }
  static Message tool(std::string call_id, std::string payload) {
    return {Role::Tool, std::move(payload), {}, std::move(call_id)};
  }
};

struct ToolResult {
  std::string id;
  bool ok = false;
  json payload = json::object();  // ok == true
  std::string error;              // ok == false

  static ToolResult success(std::string id, json payload) { return {std::move(id), true, std::move(payload), {}}; }
  static ToolResult failure(std::string id, std::string error) {
    return {std::move(id), false, json::object(), std::move(error)};
  }

  /// Content of the tool message fed back to the model.
  std::string content() const {
    return ok ? payload.dump() : json{{"error", error}}.dump();
  }
};

enum class FieldType { String, Number, Integer, Boolean, NumberMap, RangeMap };

struct ToolField {
  std::string name;
  FieldType type = FieldType::String;
  bool required = false;
  std::string description;
  std::optional<json> default_value;
};

struct ToolSpec {
  std::string name;
  std::string description;
  std::vector<ToolField> fields;

  /// OpenAI-style function declaration.
  json to_openai() const {
    json props = json::object();
    json required = json::array();
    for (const auto& f : fields) {
      json p;
      switch (f.type) {
        case FieldType::String: p = {{"type", "string"}}; break;
        case FieldType::Number: p = {{"type", "number"}}; break;
        case FieldType::Integer: p = {{"type", "integer"}}; break;
        case FieldType::Boolean: p = {{"type", "boolean"}}; break;
        case FieldType::NumberMap:
          p = {{"type", "object"}, {"additionalProperties", {{"type", "number"}}}};
          break;
        case FieldType::RangeMap:
          p = {{"type", "object"},
               {"additionalProperties",
                {{"type", "array"}, {"items", {{"type", "number"}}}, {"minItems", 2}, {"maxItems", 2}}}};
          break;
      }
      p["description"] = f.description;
      if (f.default_value) p["default"] = *f.default_value;
      props[f.name] = p;
      if (f.required) required.push_back(f.name);
    }
    return {{"type", "function"},
            {"function",
             {{"name", name},
              {"description", description},
              {"parameters", {{"type", "object"}, {"properties", props}, {"required", required}}}}}};
  }

  /// Checks the arguments against the schema and fills defaults. Throws
  /// ToolArgumentInvalid naming the offending field.
  json validate(const json& args) const {
    if (!args.is_object()) throw Error(ErrorCode::ToolArgumentInvalid, name + ": arguments must be an object");
    for (const auto& [key, value] : args.items()) {
      bool known = false;
      for (const auto& f : fields) known = known || f.name == key;
      if (!known) throw Error(ErrorCode::ToolArgumentInvalid, name + ": unknown argument '" + key + "'");
    }
    json out = json::object();
    for (const auto& f : fields) {
      if (!args.contains(f.name) || args.at(f.name).is_null()) {
        if (f.required) throw Error(ErrorCode::ToolArgumentInvalid, name + ": missing required argument '" + f.name + "'");
        if (f.default_value) out[f.name] = *f.default_value;
        continue;
      }
      const json& v = args.at(f.name);
      if (!matches(f.type, v))
        throw Error(ErrorCode::ToolArgumentInvalid, name + ": argument '" + f.name + "' has the wrong type");
      out[f.name] = v;
    }
    return out;
  }

 private:
  static bool finite_number(const json& v) { return v.is_number() && std::isfinite(v.get<double>()); }

  static bool matches(FieldType type, const json& v) {
    switch (type) {
      case FieldType::String: return v.is_string();
      case FieldType::Number: return finite_number(v);
      case FieldType::Integer:
        return v.is_number_integer() || (finite_number(v) && std::floor(v.get<double>()) == v.get<double>());
      case FieldType::Boolean: return v.is_boolean();
      case FieldType::NumberMap:
        if (!v.is_object()) return false;
        for (const auto& [k, x] : v.items())
          if (!finite_number(x)) return false;
        return true;
      case FieldType::RangeMap:
        if (!v.is_object()) return false;
        for (const auto& [k, x] : v.items())
          if (!x.is_array() || x.size() != 2 || !finite_number(x[0]) || !finite_number(x[1])) return false;
        return true;
    }
    return false;
  }
};

/// Chat-completions wire form of a message.
inline json to_openai(const Message& m) {
  json j = {{"role", to_string(m.role)}};
  if (m.role == Role::Assistant && !m.tool_calls.empty()) {
    j["content"] = m.content.empty() ? json(nullptr) : json(m.content);
    json calls = json::array();
    for (const auto& c : m.tool_calls)
      calls.push_back({{"id", c.id},
                       {"type", "function"},
                       {"function", {{"name", c.name}, {"arguments", c.arguments.dump()}}}});
    j["tool_calls"] = calls;
  } else {
    j["content"] = m.content;
  }
  if (m.role == Role::Tool) j["tool_call_id"] = m.tool_call_id;
  return j;
}

/// Parses an assistant message from a chat-completions reply. Tool-call
/// arguments arrive as a JSON string; unparsable arguments become an object
/// with a "_raw" member so validation reports them instead of crashing.
inline Message message_from_openai(const json& j) {
  Message m;
  m.role = role_from_string(j.value("role", "assistant"));
  if (j.contains("content") && j.at("content").is_string()) m.content = j.at("content").get<std::string>();
  if (j.contains("tool_calls") && j.at("tool_calls").is_array()) {
    for (const auto& c : j.at("tool_calls")) {
      ToolCall call;
      call.id = c.value("id", "");
      const json& fn = c.contains("function") ? c.at("function") : c;
      call.name = fn.value("name", "");
      if (fn.contains("arguments")) {
        const json& a = fn.at("arguments");
        if (a.is_string()) {
          const auto raw = a.get<std::string>();
          call.arguments = raw.empty() ? json::object() : json::parse(raw, nullptr, false);
          if (call.arguments.is_discarded()) call.arguments = json{{"_raw", raw}};
        } else {
          call.arguments = a;
        }
      }
      m.tool_calls.push_back(std::move(call));
    }
  }
  if (j.contains("tool_call_id")) m.tool_call_id = j.at("tool_call_id").get<std::string>();
  return m;
}

}  // namespace sasmate::agent
