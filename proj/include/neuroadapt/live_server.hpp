#pragma once

#include "neuroadapt/config.hpp"
#include "neuroadapt/session.hpp"

#include <atomic>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace neuroadapt {

// Live explicit-feedback sessions for the browser console.
//
// WebSocket protocol (JSON text frames):
//   client -> server  {"type":"ready"} | {"type":"rating","value":0..1} | {"type":"abort"}
//   server -> client  {"type":"trial_start","trial","condition","proxies":{color,sound,vibration}}
//                     {"type":"telemetry","t","q":[4],"alpha","epsilon","last_reward"}
//                     {"type":"converged","action","steps"}   action null at max_trials
//                     {"type":"error","code","msg"}
//
// One session at a time; a second connection gets an error with code
// "busy". Every trial is appended to the session log before telemetry is
// sent, so a dropped connection, abort or rating timeout leaves a log that
// --resume continues. Plain HTTP GETs are answered from live.static_dir.
struct LiveServerOptions {
  std::string host{"127.0.0.1"};
  unsigned short port{0};  // 0 = ephemeral
  std::filesystem::path out_dir;
  bool resume{false};  // continue the newest unfinished log in out_dir
  bool force{false};   // replace existing logs in out_dir
};

class LiveServer {
 public:
  // Binds immediately. Throws std::runtime_error when out_dir already holds
  // logs and neither force nor resume is set, or when binding fails.
  LiveServer(ExperimentConfig config, LiveServerOptions options);
  ~LiveServer();
  LiveServer(const LiveServer&) = delete;
  LiveServer& operator=(const LiveServer&) = delete;

  unsigned short port() const;

  // Serves until stop().
  void run();
  // run() on a background thread.
  void start();
  void stop();

  int sessions_completed() const;
  // Log files written or continued by this server, in creation order.
  std::vector<std::filesystem::path> logs() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Log path for live session `index` in `dir`.
std::filesystem::path live_log_path(const std::filesystem::path& dir, int index);

}  // namespace neuroadapt
