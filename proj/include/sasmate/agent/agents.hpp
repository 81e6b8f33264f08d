#pragma once

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sasmate/agent/backend.hpp"
#include "sasmate/agent/messages.hpp"
#include "sasmate/agent/session.hpp"
#include "sasmate/agent/settings.hpp"
#include "sasmate/agent/tools.hpp"
#include "sasmate/docstore.hpp"

namespace sasmate::agent {

enum class Task { Guidance, Sld, Generate, Fit };

inline std::string to_string(Task t) {
  switch (t) {
    case Task::Guidance: return "guidance";
    case Task::Sld: return "sld";
    case Task::Generate: return "generate";
    case Task::Fit: return "fit";
  }
  return "guidance";
}

struct RouteDecision {
  Task task = Task::Guidance;
  std::string rationale;
  bool needs_upload = false;  // fit requested without any uploaded file
};

struct AgentProfile {
  std::string name;
  std::string system_prompt;
  std::vector<std::string> tools;
  int max_tool_iterations = 8;
};

struct ToolTraceEntry {
  ToolCall call;
  ToolResult result;
};

struct AgentReply {
  std::string agent;
  std::string final_text;
  std::vector<std::string> plot_ids;
  std::vector<ToolTraceEntry> tool_trace;
  bool iteration_limit = false;
  bool backend_failed = false;
};

/// Example prompts offered by the chat panel, one per capability plus the
/// introduction.
inline const std::vector<std::string>& canonical_prompts() {
  static const std::vector<std::string> prompts = {
      "What can you do for me?",
      "Calculate the SLD of Dimethyl sulfoxide",
      "Generate scattering data for a lamellar model with thickness 50 Å for q from 0.01 to 1 1/Å",
      "Fit my uploaded data with the sphere model. The solvent is heavy water; the sample SLD is unknown, "
      "use 1 as an estimation."};
  return prompts;
}

inline std::string capabilities_text() {
  return "I am an assistant for small-angle scattering (SAS) analysis. I can help with three tasks:\n"
         "1. SLD calculation: real and imaginary neutron scattering length density and X-ray SLD from a "
         "material name or a chemical formula and mass density. Example: \"Calculate the SLD of D2O with "
         "density 1.1044 g/cm3\".\n"
         "2. Data generation: synthetic I(q) curves from the sphere, cylinder, ellipsoid and lamellar "
         "models with your parameters and q range, shown as a plot. Example: \"Generate scattering data "
         "for a lamellar model with thickness 50 Å for q from 0.01 to 1\".\n"
         "3. Data fitting: fit an uploaded q, I, dI data file with a model, holding the sample and solvent "
         "SLDs fixed and starting from your initial guesses; you get fitted values with uncertainties, "
         "reduced chi2 and a plot with normalized residuals. Example: \"Fit my uploaded data with the "
         "sphere model, the solvent is heavy water\".";
}

inline std::string upload_request_text() {
  return "To fit data I need a data file first. Please upload your scattering data (columns q, I and "
         "optionally dI, as .txt, .dat, .csv or .abs) and ask again, naming the model and what you know "
         "about the sample and solvent.\n\n" +
         capabilities_text();
}

inline AgentProfile coordinator_profile() {
  return {"coordinator",
          "You are the coordinator of a small-angle scattering analysis assistant. You talk to the user "
          "directly. When the user asks what you can do or needs direction, introduce yourself and describe "
          "the three capabilities: SLD calculation, data generation and data fitting, each with a short "
          "example prompt.",
          {},
          1};
}

inline AgentProfile sld_profile() {
  return {"sld",
          "You are the SLD expert. Determine the chemical formula and mass density (g/cm^3) of the material "
          "the user names, using your own knowledge when only a name is given, then call tool_sld. Report "
          "the real and imaginary neutron SLD and the X-ray SLD in 1e-6/Ang^2, with the formula and density "
          "you used.",
          {kToolSld},
          8};
}

inline AgentProfile generation_profile() {
  return {"generation",
          "You are the data generation expert. Choose the scattering model that matches the user's sample, "
          "read its documentation (tool_search_docs, tool_model_doc) to get parameter names and units, then "
          "call tool_generate with the requested parameters and q range (defaults: model defaults, q from "
          "0.001 to 1 1/Ang, 200 points). Summarise the model choice and the curve.",
          {kToolGenerate, kToolSearchDocs, kToolModelDoc, kToolListModels},
          8};
}

inline AgentProfile fitting_profile() {
  return {"fitting",
          "You are the data fitting expert. Identify the uploaded file and the model. Compute the sample and "
          "solvent SLDs with tool_sld (or take the user's values) and hold them fixed; read the model "
          "documentation for parameter names; use the user's estimates as initial values; then call "
          "tool_fit. Report the model, fitted values with uncertainties, fixed parameters, reduced chi2 and "
          "whether the fit converged.",
          {kToolFit, kToolSld, kToolSearchDocs, kToolModelDoc, kToolListModels},
          8};
}

inline AgentProfile profile_for(Task task) {
  switch (task) {
    case Task::Sld: return sld_profile();
    case Task::Generate: return generation_profile();
    case Task::Fit: return fitting_profile();
    case Task::Guidance: break;
  }
  return coordinator_profile();
}

namespace agentdetail {

inline std::set<std::string> words(const std::string& text) {
  std::set<std::string> out;
  for (auto& t : tokenize(text)) out.insert(std::move(t));
  return out;
}

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

inline std::string file_inventory(const SessionState& session) {
  std::string out;
  for (const auto& f : session.files()) {
    char buf[160];
    std::snprintf(buf, sizeof buf, " (%zu points, q %.4g to %.4g 1/Ang%s)", f.dataset.size(), f.dataset.q.front(),
                  f.dataset.q.back(), f.dataset.has_errors() ? ", with dI" : "");
    out += "- " + f.file_id + ": " + f.name + buf + "\n";
  }
  return out.empty() ? "none\n" : out;
}

inline std::string plot_inventory(const SessionState& session) {
  std::string out;
  for (const auto& id : session.plot_ids()) out += "- " + id + "\n";
  return out.empty() ? "none\n" : out;
}

inline std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : ",") + s;
  return out.empty() ? "none" : out;
}

}  // namespace agentdetail

/// Keyword routing used when the backend cannot classify a prompt.
inline RouteDecision keyword_route(const std::string& text, bool has_files,
                                   const ModelRegistry& models = ModelRegistry::builtin()) {
  using namespace agentdetail;
  const auto w = words(text);
  const std::string l = lower(text);
  auto any = [&](std::initializer_list<const char*> keys) {
    return std::any_of(keys.begin(), keys.end(), [&](const char* k) { return w.count(k) > 0; });
  };
  if (any({"fit", "fitting", "fitted", "analyze", "analyse", "analysis", "analyzing", "analysing", "refine"})) {
    if (has_files) return {Task::Fit, "keyword fallback: fitting request with uploaded data", false};
    return {Task::Guidance, "keyword fallback: fitting request but no uploaded file", true};
  }
  if (any({"sld", "slds"}) || l.find("scattering length density") != std::string::npos)
    return {Task::Sld, "keyword fallback: SLD request", false};
  bool model_named = false;
  for (const auto& info : models.list_models()) model_named = model_named || w.count(info.name) > 0;
  if (model_named || any({"generate", "generating", "plot", "simulate", "simulated", "synthetic", "curve"}))
    return {Task::Generate, "keyword fallback: data generation request", false};
  return {Task::Guidance, "keyword fallback: no task keywords", false};
}

/// Coordinator plus the three expert agents over one chat backend.
class AgentSystem {
 public:
  AgentSystem(std::shared_ptr<ChatBackend> backend, std::shared_ptr<const SettingsStore> settings, ToolContext tools)
      : backend_(std::move(backend)), settings_(std::move(settings)), tools_(tools) {}

  ChatBackend& backend() { return *backend_; }
  const ToolContext& tools() const { return tools_; }

  /// One forced-choice classification call; keyword heuristics when the
  /// backend fails or answers with something else. `fit` needs an upload.
  RouteDecision route(const std::string& user_message, SessionState& session) {
    const bool has_files = session.file_count() > 0;
    ChatRequest req;
    req.agent = "router";
    req.model = settings_->snapshot().model;
    req.messages = {Message::system("Classify the user's request for a small-angle scattering assistant. Reply "
                                    "with exactly one word: guidance (questions about capabilities or anything "
                                    "else), sld (scattering length density calculation), generate (synthetic "
                                    "scattering data from a model) or fit (fitting uploaded data)."),
                    Message::user(user_message + "\n\n[uploaded files: " + std::to_string(session.file_count()) + "]")};
    req.context = context_json(session);
    session.log("[coordinator] backend request (routing): model=" + req.model + " tools=none");
    RouteDecision decision;
    bool classified = false;
    try {
      const Message reply = backend_->complete(req);
      const auto w = agentdetail::words(reply.content);
      for (Task t : {Task::Guidance, Task::Sld, Task::Generate, Task::Fit}) {
        if (w.count(to_string(t))) {
          decision = {t, "backend classification: " + to_string(t), false};
          classified = true;
          break;
        }
      }
      if (!classified) session.log("[coordinator] routing reply not understood, using keyword fallback");
    } catch (const Error& e) {
      session.log(std::string("[coordinator] routing backend unavailable (") + e.what() + "), using keyword fallback");
    }
    if (!classified) decision = keyword_route(user_message, has_files, *tools_.models);
    if (decision.task == Task::Fit && !has_files) decision = {Task::Guidance, decision.rationale + "; no uploaded file", true};
    session.log("[coordinator] route: " + to_string(decision.task) + " (" + decision.rationale + ")");
    return decision;
  }

  /// Tool-call loop: at most max_tool_iterations backend calls.
  AgentReply run_agent(const AgentProfile& profile, const std::string& task_message, SessionState& session) {
    AgentReply out;
    out.agent = profile.name;
    std::vector<Message> messages = {
        Message::system(profile.system_prompt),
        Message::user("Task: " + task_message + "\n\nUploaded files:\n" + agentdetail::file_inventory(session) +
                      "Plots:\n" + agentdetail::plot_inventory(session))};
    const auto specs = tool_specs(profile.tools);
    const std::string tool_list = agentdetail::join(profile.tools);
    std::string last_text;
    for (int iter = 1; iter <= profile.max_tool_iterations; ++iter) {
      ChatRequest req;
      req.agent = profile.name;
      req.model = settings_->snapshot().model;
      req.messages = messages;
      req.tools = specs;
      req.context = context_json(session);
      session.log("[" + profile.name + "] backend request " + std::to_string(iter) + ": model=" + req.model +
                  " messages=" + std::to_string(messages.size()) + " tools=" + tool_list);
      Message reply;
      try {
        reply = backend_->complete(req);
      } catch (const Error& e) {
        session.log("[" + profile.name + "] backend error: " + e.what() + " (tools=" + tool_list + ")");
        out.backend_failed = true;
        out.final_text = "Sorry, the language model backend failed: " + std::string(e.what());
        return out;
      }
      reply.role = Role::Assistant;
      messages.push_back(reply);
      if (!reply.content.empty()) last_text = reply.content;
      if (reply.tool_calls.empty()) {
        session.log("[" + profile.name + "] final reply (tools=" + tool_list + ")");
        out.final_text = reply.content;
        return out;
      }
      for (const auto& call : reply.tool_calls) {
        session.log("[" + profile.name + "] tool call " + call.name + " " + call.arguments.dump());
        ToolResult result = execute_tool(call, session, tools_, profile.tools);
        if (result.ok) {
          session.log("[" + profile.name + "] tool result " + call.name + ": ok");
          if (result.payload.contains("plot_id")) out.plot_ids.push_back(result.payload.at("plot_id").get<std::string>());
        } else {
          session.log("[" + profile.name + "] tool result " + call.name + ": error: " + result.error);
        }
        messages.push_back(Message::tool(call.id, result.content()));
        out.tool_trace.push_back({call, std::move(result)});
      }
    }
    out.iteration_limit = true;
    out.final_text = (last_text.empty() ? std::string() : last_text + "\n\n") +
                     "[stopped: iteration limit of " + std::to_string(profile.max_tool_iterations) +
                     " tool rounds reached]";
    session.log("[" + profile.name + "] iteration limit reached (tools=" + tool_list + ")");
    return out;
  }

  /// Routes the prompt, answers guidance itself or delegates to an expert,
  /// and appends the user message and the reply to the transcript.
  AgentReply handle_user_turn(const std::string& text, SessionState& session) {
    session.touch();
    session.append_message(Message::user(text));
    session.log("[coordinator] user: " + text);
    const RouteDecision decision = route(text, session);
    AgentReply reply;
    if (decision.task == Task::Guidance) {
      reply = guidance(text, decision, session);
    } else {
      reply = run_agent(profile_for(decision.task), text, session);
    }
    session.append_message(Message::assistant(reply.final_text));
    session.touch();
    return reply;
  }

 private:
  AgentReply guidance(const std::string& text, const RouteDecision& decision, SessionState& session) {
    AgentReply out;
    out.agent = "coordinator";
    if (decision.needs_upload) {
      out.final_text = upload_request_text();
      session.log("[coordinator] guidance: asked for an upload (tools=none)");
      return out;
    }
    const AgentProfile profile = coordinator_profile();
    ChatRequest req;
    req.agent = profile.name;
    req.model = settings_->snapshot().model;
    req.messages = {Message::system(profile.system_prompt), Message::user(text)};
    req.context = context_json(session);
    session.log("[coordinator] backend request (guidance): model=" + req.model + " tools=none");
    try {
      out.final_text = backend_->complete(req).content;
    } catch (const Error& e) {
      session.log(std::string("[coordinator] guidance backend unavailable (") + e.what() + "), using built-in text");
    }
    if (out.final_text.empty()) out.final_text = capabilities_text();
    return out;
  }

  static json context_json(const SessionState& session) {
    json files = json::array();
    for (const auto& f : session.files()) files.push_back(f.file_id);
    return {{"files", files}, {"plots", session.plot_ids()}};
  }

  std::shared_ptr<ChatBackend> backend_;
  std::shared_ptr<const SettingsStore> settings_;
  ToolContext tools_;
};

}  // namespace sasmate::agent
