#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "sasmate/agent/agents.hpp"
#include "sasmate/agent/backend.hpp"
#include "sasmate/agent/session.hpp"
#include "sasmate/agent/settings.hpp"
#include "sasmate/dataio.hpp"
#include "sasmate/docstore.hpp"
#include "sasmate/plot.hpp"

namespace sasmate {

struct ServiceConfig {
  std::size_t max_upload_bytes = 10 * 1024 * 1024;
  std::chrono::seconds session_ttl{24 * 3600};
  std::filesystem::path ui_dir;    // static assets served at "/" when set
  std::filesystem::path data_dir;  // uploads and plots are also written here when set
};

/// JSON API over httplib: sessions, chat, uploads, plots, logs, models, settings.
class Service {
 public:
  using json = nlohmann::json;

  Service(ServiceConfig config, std::shared_ptr<agent::ChatBackend> backend,
          std::shared_ptr<agent::SettingsStore> settings, std::shared_ptr<const DocStore> docs,
          const ModelRegistry& models = ModelRegistry::builtin())
      : config_(std::move(config)),
        settings_(std::move(settings)),
        docs_(std::move(docs)),
        models_(&models),
        agents_(std::move(backend), settings_, agent::ToolContext{&models, docs_.get()}) {
    routes();
  }

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  httplib::Server& server() { return server_; }

  bool listen(const std::string& host, int port) { return server_.listen(host, port); }

  /// Binds an ephemeral port; serve with listen_after_bind().
  int bind_any_port(const std::string& host = "127.0.0.1") { return server_.bind_to_any_port(host); }
  bool listen_after_bind() { return server_.listen_after_bind(); }
  void stop() { server_.stop(); }
  void wait_until_ready() { server_.wait_until_ready(); }

  std::shared_ptr<agent::SessionState> create_session() {
    sweep_expired();
    auto s = std::make_shared<agent::SessionState>();
    std::lock_guard lock(mu_);
    sessions_[s->id()] = s;
    return s;
  }

  std::shared_ptr<agent::SessionState> find_session(const std::string& id) {
    sweep_expired();
    std::lock_guard lock(mu_);
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
  }

 private:
  static void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
    send_json(res, status, {{"code", code}, {"message", message}});
  }

  static std::optional<json> parse_body(const httplib::Request& req, httplib::Response& res) {
    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) {
      send_error(res, 400, "InvalidRequest", "request body must be a JSON object");
      return std::nullopt;
    }
    return body;
  }

  void sweep_expired() {
    const auto now = agent::SessionState::Clock::now();
    std::lock_guard lock(mu_);
    for (auto it = sessions_.begin(); it != sessions_.end();) {
      if (now - it->second->last_active() > config_.session_ttl) it = sessions_.erase(it);
      else ++it;
    }
  }

  json settings_json() const {
    const auto s = settings_->snapshot();
    return {{"backend", s.backend},
            {"model", s.model},
            {"endpoint", s.endpoint},
            {"api_key_set", settings_->has_api_key()},
            {"suggested_models", agent::suggested_models()}};
  }

  void persist_file(const agent::SessionState& session, const std::string& file_id, const std::string& name,
                    const std::string& content) {
    if (config_.data_dir.empty()) return;
    const auto dir = config_.data_dir / session.id() / "uploads";
    std::filesystem::create_directories(dir);
    std::ofstream(dir / (file_id + "_" + std::filesystem::path(name).filename().string()), std::ios::binary) << content;
  }

  void persist_plots(const agent::SessionState& session, const std::vector<std::string>& plot_ids) {
    if (config_.data_dir.empty()) return;
    const auto dir = config_.data_dir / session.id() / "plots";
    std::filesystem::create_directories(dir);
    for (const auto& id : plot_ids)
      if (auto p = session.plot(id)) std::ofstream(dir / (id + ".json")) << json(*p).dump();
  }

  std::shared_ptr<agent::SessionState> session_for_plot(const std::string& plot_id) {
    const auto pos = plot_id.rfind("-plot-");
    if (pos == std::string::npos) return nullptr;
    return find_session(plot_id.substr(0, pos));
  }

  void routes() {
    server_.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (!res.body.empty()) return;
      const std::string code = res.status == 413 ? "PayloadTooLarge" : res.status == 404 ? "NotFound" : "HttpError";
      res.set_content(json{{"code", code}, {"message", httplib::status_message(res.status)}}.dump(),
                      "application/json");
    });
    server_.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      std::string what = "internal error";
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        what = e.what();
      } catch (...) {
      }
      send_error(res, 500, "InternalError", what);
    });
    // leave headroom so oversize uploads get our own 413 document
    server_.set_payload_max_length(config_.max_upload_bytes * 4);

    if (!config_.ui_dir.empty() && std::filesystem::is_directory(config_.ui_dir)) {
      server_.set_mount_point("/", config_.ui_dir.string());
    } else {
      server_.Get("/", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(
            "<!doctype html><html><head><meta charset=\"utf-8\"><title>sasmate</title></head><body>"
            "<h1>sasmate service</h1><p>The web UI bundle is not installed; start the server with "
            "<code>--ui-dir</code>. JSON API: /api/session, /api/chat, /api/upload, /api/plots/{id}, "
            "/api/logs, /api/models, /api/settings, /api/prompts.</p></body></html>",
            "text/html");
      });
    }

    server_.Post("/api/session", [this](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, {{"session_id", create_session()->id()}});
    });

    server_.Get(R"(/api/session/([0-9a-f]+))", [this](const httplib::Request& req, httplib::Response& res) {
      auto s = find_session(req.matches[1]);
      if (!s) return send_error(res, 404, "UnknownSession", "no such session");
      json files = json::array();
      for (const auto& f : s->files())
        files.push_back({{"file_id", f.file_id}, {"name", f.name}, {"points", f.dataset.size()},
                         {"q_range", {f.dataset.q.front(), f.dataset.q.back()}}});
      json transcript = json::array();
      for (const auto& m : s->transcript()) transcript.push_back({{"role", agent::to_string(m.role)}, {"content", m.content}});
      send_json(res, 200, {{"session_id", s->id()}, {"files", files}, {"plots", s->plot_ids()}, {"transcript", transcript}});
    });

    server_.Post("/api/chat", [this](const httplib::Request& req, httplib::Response& res) {
      auto body = parse_body(req, res);
      if (!body) return;
      const std::string sid = body->value("session_id", "");
      const std::string text = body->value("text", "");
      auto session = find_session(sid);
      if (!session) return send_error(res, 404, "UnknownSession", "no such session");
      if (text.empty()) return send_error(res, 400, "InvalidRequest", "text must be non-empty");
      std::unique_lock turn(session->turn_mutex(), std::try_to_lock);
      if (!turn.owns_lock()) return send_error(res, 409, "TurnInFlight", "a chat turn is already running for this session");
      const agent::AgentReply reply = agents_.handle_user_turn(text, *session);
      persist_plots(*session, reply.plot_ids);
      json out = {{"reply_text", reply.final_text},
                  {"plot_ids", reply.plot_ids},
                  {"agent", reply.agent},
                  {"iteration_limit", reply.iteration_limit},
                  {"log_cursor", session->log_size()}};
      if (reply.backend_failed) {
        out["code"] = "BackendError";
        out["message"] = reply.final_text;
        return send_json(res, 502, out);
      }
      send_json(res, 200, out);
    });

    server_.Post("/api/upload", [this](const httplib::Request& req, httplib::Response& res) {
      std::string sid = req.get_param_value("session_id");
      if (sid.empty() && req.has_file("session_id")) sid = req.get_file_value("session_id").content;
      auto session = find_session(sid);
      if (!session) return send_error(res, 404, "UnknownSession", "no such session");
      if (!req.has_file("file")) return send_error(res, 400, "InvalidRequest", "multipart field 'file' is required");
      const auto file = req.get_file_value("file");
      if (file.content.size() > config_.max_upload_bytes)
        return send_error(res, 413, "PayloadTooLarge", "uploads are limited to 10 MB");
      ParsedFile parsed;
      try {
        parsed = load_ascii(file.content, file.filename);
      } catch (const Error& e) {
        return send_error(res, 422, std::string(to_string(e.code())), e.detail());
      }
      const std::string name = file.filename.empty() ? "upload.txt" : file.filename;
      const auto& d = parsed.dataset;
      const std::string fid = session->add_file(name, d);
      session->log("[data] uploaded " + name + " as " + fid + ": " + std::to_string(d.size()) + " points, " +
                   std::to_string(parsed.skipped_lines) + " skipped lines");
      for (const auto& w : parsed.warnings) session->log("[data] warning: " + w);
      persist_file(*session, fid, name, file.content);
      send_json(res, 200, {{"file_id", fid},
                           {"name", name},
                           {"points", d.size()},
                           {"q_range", {d.q.front(), d.q.back()}},
                           {"columns", parsed.column_count},
                           {"skipped_lines", parsed.skipped_lines},
                           {"warnings", parsed.warnings}});
    });

    server_.Get(R"(/api/plots/([A-Za-z0-9\-]+))", [this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      auto session = session_for_plot(id);
      std::optional<PlotArtifact> plot = session ? session->plot(id) : std::nullopt;
      if (!plot) return send_error(res, 404, "UnknownPlot", "no such plot");
      if (req.get_param_value("format") == "svg") return res.set_content(render_svg(*plot), "image/svg+xml");
      send_json(res, 200, json(*plot));
    });

    server_.Get("/api/logs", [this](const httplib::Request& req, httplib::Response& res) {
      auto session = find_session(req.get_param_value("session_id"));
      if (!session) return send_error(res, 404, "UnknownSession", "no such session");
      std::size_t cursor = 0;
      if (req.has_param("cursor")) {
        try {
          cursor = std::stoul(req.get_param_value("cursor"));
        } catch (const std::exception&) {
          return send_error(res, 400, "InvalidRequest", "cursor must be a non-negative integer");
        }
      }
      const auto lines = session->logs_since(cursor);
      send_json(res, 200, {{"lines", lines}, {"cursor", std::max(cursor, session->log_size())}});
    });

    server_.Get("/api/models", [this](const httplib::Request&, httplib::Response& res) {
      json out = json::array();
      for (const auto& info : models_->list_models()) {
        json params = json::array();
        for (const auto& p : info.parameters)
          params.push_back({{"name", p.name}, {"units", p.units}, {"default", p.default_value},
                            {"lower", p.lower}, {"upper", p.upper}, {"description", p.description}});
        out.push_back({{"name", info.name}, {"category", info.category}, {"summary", info.summary}, {"parameters", params}});
      }
      send_json(res, 200, out);
    });

    server_.Get("/api/prompts", [](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, {{"prompts", agent::canonical_prompts()}});
    });

    server_.Get("/api/settings", [this](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, settings_json());
    });

    server_.Put("/api/settings", [this](const httplib::Request& req, httplib::Response& res) {
      auto body = parse_body(req, res);
      if (!body) return;
      for (const char* key : {"model", "endpoint", "api_key"})
        if (body->contains(key) && !body->at(key).is_string())
          return send_error(res, 400, "InvalidRequest", std::string(key) + " must be a string");
      if (body->contains("model")) {
        auto model = body->at("model").get<std::string>();
        if (model.empty()) return send_error(res, 400, "InvalidRequest", "model must be non-empty");
        settings_->set_model(std::move(model));
      }
      if (body->contains("endpoint")) settings_->set_endpoint(body->at("endpoint").get<std::string>());
      if (body->contains("api_key")) settings_->set_api_key(body->at("api_key").get<std::string>());
      send_json(res, 200, settings_json());
    });
  }

  ServiceConfig config_;
  std::shared_ptr<agent::SettingsStore> settings_;
  std::shared_ptr<const DocStore> docs_;
  const ModelRegistry* models_;
  agent::AgentSystem agents_;
  httplib::Server server_;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<agent::SessionState>> sessions_;
};

}  // namespace sasmate
