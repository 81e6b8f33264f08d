#pragma once

#include <atomic>
#include <chrono>
#include <cstdio>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "sasmate/agent/messages.hpp"
#include "sasmate/dataset.hpp"
#include "sasmate/plot.hpp"

namespace sasmate::agent {

/// 32 hex chars from std::random_device.
inline std::string random_id() {
  std::random_device rd;
  std::string out;
  for (int i = 0; i < 4; ++i) {
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", static_cast<unsigned>(rd()));
    out += buf;
  }
  return out;
}

struct UploadedFile {
  std::string file_id;
  std::string name;
  Dataset dataset;
};

/// Conversation state. The transcript and logs are append-only. Files,
/// plots and logs may be read by other threads while a turn runs; the turn
/// mutex serialises turns.
class SessionState {
 public:
  using Clock = std::chrono::steady_clock;

  explicit SessionState(std::string id = random_id()) : id_(std::move(id)), last_active_(Clock::now()) {}
  SessionState(const SessionState&) = delete;
  SessionState& operator=(const SessionState&) = delete;

  const std::string& id() const { return id_; }

  // transcript
  void append_message(Message m) {
    std::lock_guard lock(mu_);
    transcript_.push_back(std::move(m));
  }
  std::vector<Message> transcript() const {
    std::lock_guard lock(mu_);
    return transcript_;
  }

  // logs
  void log(const std::string& line) {
    std::lock_guard lock(mu_);
    logs_.push_back(line);
  }
  std::size_t log_size() const {
    std::lock_guard lock(mu_);
    return logs_.size();
  }
  /// Lines at index >= cursor.
  std::vector<std::string> logs_since(std::size_t cursor) const {
    std::lock_guard lock(mu_);
    if (cursor >= logs_.size()) return {};
    return {logs_.begin() + static_cast<std::ptrdiff_t>(cursor), logs_.end()};
  }

  // files
  std::string add_file(std::string name, Dataset d) {
    std::lock_guard lock(mu_);
    std::string fid = "file-" + std::to_string(++file_counter_);
    file_order_.push_back(fid);
    files_.emplace(fid, UploadedFile{fid, std::move(name), std::move(d)});
    return fid;
  }
  std::optional<UploadedFile> file(const std::string& file_id) const {
    std::lock_guard lock(mu_);
    auto it = files_.find(file_id);
    if (it == files_.end()) return std::nullopt;
    return it->second;
  }
  std::vector<UploadedFile> files() const {
    std::lock_guard lock(mu_);
    std::vector<UploadedFile> out;
    for (const auto& id : file_order_) out.push_back(files_.at(id));
    return out;
  }
  std::size_t file_count() const {
    std::lock_guard lock(mu_);
    return files_.size();
  }

  // plots; ids embed the session id so they are unique across sessions
  std::string add_plot(PlotArtifact p) {
    std::lock_guard lock(mu_);
    p.plot_id = id_ + "-plot-" + std::to_string(++plot_counter_);
    std::string pid = p.plot_id;
    plot_order_.push_back(pid);
    plots_.emplace(pid, std::move(p));
    return pid;
  }
  std::optional<PlotArtifact> plot(const std::string& plot_id) const {
    std::lock_guard lock(mu_);
    auto it = plots_.find(plot_id);
    if (it == plots_.end()) return std::nullopt;
    return it->second;
  }
  std::vector<std::string> plot_ids() const {
    std::lock_guard lock(mu_);
    return plot_order_;
  }

  std::mutex& turn_mutex() { return turn_mu_; }

  void touch() {
    std::lock_guard lock(mu_);
    last_active_ = Clock::now();
  }
  Clock::time_point last_active() const {
    std::lock_guard lock(mu_);
    return last_active_;
  }

 private:
  std::string id_;
  mutable std::mutex mu_;
  std::mutex turn_mu_;
  std::vector<Message> transcript_;
  std::vector<std::string> logs_;
  std::map<std::string, UploadedFile> files_;
  std::vector<std::string> file_order_;
  std::map<std::string, PlotArtifact> plots_;
  std::vector<std::string> plot_order_;
  std::size_t file_counter_ = 0;
  std::size_t plot_counter_ = 0;
  Clock::time_point last_active_;
};

}  // namespace sasmate::agent
