#include "neuroadapt/live_server.hpp"

#include "neuroadapt/analysis.hpp"
#include "neuroadapt/io.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <optional>
#include <regex>
#include <sstream>
#include <thread>

namespace neuroadapt {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;
using nlohmann::json;

std::filesystem::path live_log_path(const std::filesystem::path& dir, int index) {
  char name[32];
  std::snprintf(name, sizeof name, "live_%04d.jsonl", index);
  return dir / name;
}

namespace {

using Clock = std::chrono::steady_clock;
using WsStream = websocket::stream<tcp::socket>;

// Index of a live_NNNN.jsonl file name, if it is one.
std::optional<int> live_index(const std::filesystem::path& p) {
  static const std::regex re(R"(live_(\d+)\.jsonl)");
  std::smatch m;
  const std::string name = p.filename().string();
  if (!std::regex_match(name, m, re)) return std::nullopt;
  return std::stoi(m[1].str());
}

bool has_summary(const std::filesystem::path& p) {
  try {
    return read_session_log(p).summary.has_value();
  } catch (const std::exception&) {
    return true;  // unreadable logs are never resumed
  }
}

std::string_view mime_type(const std::filesystem::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".html" || ext == ".htm") return "text/html";
  if (ext == ".js" || ext == ".mjs") return "application/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  if (ext == ".wav") return "audio/wav";
  if (ext == ".mp3") return "audio/mpeg";
  return "application/octet-stream";
}

json error_message(std::string_view code, std::string_view msg) {
  return {{"type", "error"}, {"code", code}, {"msg", msg}};
}

}  // namespace

struct LiveServer::Impl {
  ExperimentConfig config;
  LiveServerOptions opt;
  net::io_context ioc;
  tcp::acceptor acceptor{ioc};
  std::thread background;
  std::atomic<bool> stopping{false};
  std::atomic<bool> busy{false};

  mutable std::mutex mu;
  std::vector<std::thread> workers;
  std::vector<std::filesystem::path> logs;
  std::vector<SessionResult> finished;
  std::optional<std::filesystem::path> resume_path;
  int next_index{0};
  unsigned short bound_port{0};

  struct Connection {
    net::io_context ioc;
    WsStream ws{ioc};
    // Frame read state. A read that times out stays pending so the stream
    // remains usable for the error frame and the close handshake.
    beast::flat_buffer rbuf;
    bool reading{false};
    std::optional<beast::error_code> read_ec;
  };

  Impl(ExperimentConfig c, LiveServerOptions o) : config(std::move(c)), opt(std::move(o)) {
    config.validate();
    if (opt.out_dir.empty()) throw std::invalid_argument("live server: output directory required");
    std::filesystem::create_directories(opt.out_dir);
    scan_out_dir();

    beast::error_code ec;
    const auto addr = net::ip::make_address(opt.host, ec);
    if (ec) throw std::runtime_error("invalid listen address '" + opt.host + "'");
    const tcp::endpoint ep(addr, opt.port);
    acceptor.open(ep.protocol());
    acceptor.set_option(net::socket_base::reuse_address(true));
    acceptor.bind(ep, ec);
    if (ec) throw std::runtime_error("cannot bind " + opt.host + ":" + std::to_string(opt.port) + ": " + ec.message());
    acceptor.listen();
    bound_port = acceptor.local_endpoint().port();
  }

  void scan_out_dir() {
    std::vector<std::pair<int, std::filesystem::path>> existing;
    for (const auto& entry : std::filesystem::directory_iterator(opt.out_dir)) {
      if (auto i = live_index(entry.path())) existing.emplace_back(*i, entry.path());
    }
    std::sort(existing.begin(), existing.end());
    if (existing.empty()) return;
    if (opt.resume) {
      next_index = existing.back().first + 1;
      for (auto it = existing.rbegin(); it != existing.rend(); ++it) {
        if (!has_summary(it->second)) {
          resume_path = it->second;
          break;
        }
      }
      return;
    }
    if (!opt.force) {
      throw std::runtime_error("output directory " + opt.out_dir.string() +
                               " already holds session logs; pass --force to replace or --resume to continue");
    }
    for (const auto& [i, p] : existing) std::filesystem::remove(p);
  }

  void accept_next() {
    auto conn = std::make_shared<Connection>();
    acceptor.async_accept(conn->ws.next_layer(), [this, conn](beast::error_code ec) {
      if (ec || stopping) return;
      std::lock_guard lock(mu);
      workers.emplace_back([this, conn] { serve(*conn); });
      accept_next();
    });
  }

  void run() {
    if (!stopping) {
      accept_next();
      ioc.run();
    }
    std::vector<std::thread> ws;
    {
      std::lock_guard lock(mu);
      ws.swap(workers);
    }
    for (auto& t : ws) t.join();
  }

  void stop() {
    stopping = true;
    net::post(ioc, [this] {
      beast::error_code ec;
      acceptor.close(ec);
    });
  }

  // Drives one pending async operation on the connection's context until it
  // completes, the timeout passes or the server stops.
  template <class Start>
  beast::error_code await(Connection& c, Start&& start, int timeout_ms) {
    std::optional<beast::error_code> result;
    c.ioc.restart();
    start([&](beast::error_code ec, std::size_t) { result = ec; });
    const auto deadline = Clock::now() + std::chrono::milliseconds(timeout_ms);
    while (!result) {
      c.ioc.run_for(std::chrono::milliseconds(25));
      if (result) break;
      if (stopping || Clock::now() >= deadline) {
        beast::error_code ignored;
        c.ws.next_layer().cancel(ignored);
        c.ioc.restart();
        c.ioc.run();
        return stopping ? beast::error_code(net::error::operation_aborted) : beast::error_code(net::error::timed_out);
      }
    }
    return *result;
  }

  // Runs the connection's context until `done` holds or the grace period
  // passes; on expiry the socket is torn down.
  template <class Done>
  bool pump(Connection& c, Done&& done, int grace_ms = 2000) {
    const auto deadline = Clock::now() + std::chrono::milliseconds(grace_ms);
    while (!done()) {
      if (c.ioc.stopped()) c.ioc.restart();
      c.ioc.run_for(std::chrono::milliseconds(25));
      if (Clock::now() >= deadline && !done()) {
        abandon(c);
        return false;
      }
    }
    return true;
  }

  void abandon(Connection& c) {
    beast::error_code ignored;
    c.ws.next_layer().cancel(ignored);
    c.ws.next_layer().close(ignored);
    c.ioc.restart();
    c.ioc.run();
  }

  // One text frame, or a timeout that leaves the read pending.
  beast::error_code read_frame(Connection& c, int timeout_ms) {
    if (!c.reading) {
      c.rbuf.clear();
      c.read_ec.reset();
      c.reading = true;
      c.ws.async_read(c.rbuf, [&c](beast::error_code ec, std::size_t) {
        c.read_ec = ec;
        c.reading = false;
      });
    }
    const auto deadline = Clock::now() + std::chrono::milliseconds(timeout_ms);
    while (!c.read_ec) {
      if (c.ioc.stopped()) c.ioc.restart();
      c.ioc.run_for(std::chrono::milliseconds(25));
      if (c.read_ec) break;
      if (stopping) {
        abandon(c);
        return net::error::operation_aborted;
      }
      if (Clock::now() >= deadline) return net::error::timed_out;
    }
    return *c.read_ec;
  }

  void send(Connection& c, const json& j) {
    const auto text = std::make_shared<std::string>(j.dump());
    std::optional<beast::error_code> done;
    c.ws.async_write(net::buffer(*text), [&done, text](beast::error_code ec, std::size_t) { done = ec; });
    if (!pump(c, [&] { return done.has_value(); })) throw std::runtime_error("send timed out");
    if (*done) throw beast::system_error(*done);
  }

  void close(Connection& c) {
    if (c.ws.is_open()) {
      std::optional<beast::error_code> done;
      c.ws.async_close(websocket::close_code::normal, [&done](beast::error_code ec) { done = ec; });
      if (!pump(c, [&] { return done.has_value(); })) return;
    }
    // A pending read finishes once the close handshake completes.
    pump(c, [&] { return !c.reading; });
  }

  void serve(Connection& c) {
    try {
      beast::flat_buffer buf;
      http::request<http::string_body> req;
      auto ec = await(
          c, [&](auto h) { http::async_read(c.ws.next_layer(), buf, req, h); }, config.live.rating_timeout_ms);
      if (ec) return;
      if (!websocket::is_upgrade(req)) {
        serve_static(c, req);
        return;
      }
      c.ws.accept(req);
      bool expected = false;
      if (!busy.compare_exchange_strong(expected, true)) {
        send(c, error_message("busy", "a session is already running"));
        close(c);
        return;
      }
      struct Release {
        std::atomic<bool>& flag;
        ~Release() { flag = false; }
      } release{busy};
      run_session(c);
    } catch (const std::exception&) {
      // connection-level failure; the log written so far is the checkpoint
    }
  }

  void serve_static(Connection& c, const http::request<http::string_body>& req) {
    http::response<http::string_body> res;
    res.version(req.version());
    res.keep_alive(false);
    std::string target(req.target());
    if (auto q = target.find('?'); q != std::string::npos) target.resize(q);
    std::filesystem::path file;
    const bool ok_target = req.method() == http::verb::get && !config.live.static_dir.empty() &&
                           target.find("..") == std::string::npos && !target.empty() && target[0] == '/';
    if (ok_target) {
      file = std::filesystem::path(config.live.static_dir) / target.substr(1);
      if (std::filesystem::is_directory(file)) file /= "index.html";
    }
    std::ifstream in(file, std::ios::binary);
    if (ok_target && in) {
      std::ostringstream body;
      body << in.rdbuf();
      res.result(http::status::ok);
      res.set(http::field::content_type, std::string(mime_type(file)));
      res.body() = body.str();
    } else {
      res.result(http::status::not_found);
      res.set(http::field::content_type, "text/plain");
      res.body() = "not found\n";
    }
    res.prepare_payload();
    beast::error_code ec;
    http::write(c.ws.next_layer(), res, ec);
    c.ws.next_layer().shutdown(tcp::socket::shutdown_both, ec);
  }

  enum class Event { ready, rating, abort, closed, timeout };

  struct Message {
    Event event{Event::closed};
    double value{0.0};
  };

  // Next meaningful client message; malformed ones are answered with an
  // error frame and skipped.
  Message next_message(Connection& c) {
    for (;;) {
      const auto ec = read_frame(c, config.live.rating_timeout_ms);
      if (ec == net::error::timed_out) return {Event::timeout};
      if (ec) return {Event::closed};
      json j;
      try {
        j = json::parse(beast::buffers_to_string(c.rbuf.data()));
      } catch (const json::exception&) {
        send(c, error_message("bad_message", "message is not valid JSON"));
        continue;
      }
      const std::string type = j.is_object() && j.contains("type") && j["type"].is_string() ? j["type"] : "";
      if (type == "ready") return {Event::ready};
      if (type == "abort") return {Event::abort};
      if (type == "rating") {
        if (!j.contains("value") || !j["value"].is_number()) {
          send(c, error_message("bad_rating", "rating value must be a number in [0, 1]"));
          continue;
        }
        const double v = j["value"].get<double>();
        if (!(v >= 0.0 && v <= 1.0)) {
          send(c, error_message("bad_rating", "rating value must be a number in [0, 1]"));
          continue;
        }
        return {Event::rating, v};
      }
      send(c, error_message("bad_message", "unknown message type '" + type + "'"));
    }
  }

  void run_session(Connection& c) {
    std::optional<std::filesystem::path> resume;
    int index = 0;
    {
      std::lock_guard lock(mu);
      resume.swap(resume_path);
      if (!resume) index = next_index++;
    }

    SessionHeader header;
    std::vector<TrialRecord> done;
    std::filesystem::path path;
    if (resume) {
      SessionLog log = read_session_log(*resume);
      header = log.header;
      done = std::move(log.explicit_log);
      path = *resume;
    } else {
      const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(index);
      header.mode = "live";
      header.seed = seed;
      header.run_index = index;
      header.config_fingerprint = config_fingerprint(config);
      header.config = config_to_json(config);
      header.agent = config.agent;
      header.agent_seed_explicit = derive_seed(seed, "agent/explicit");
      header.agent_seed_implicit = derive_seed(seed, "agent/implicit");
      header.order = BlockOrder::explicit_first;
      path = live_log_path(opt.out_dir, index);
    }

    AdaptiveBlock block =
        AdaptiveBlock::restore(header.agent, Block::explicit_feedback, header.agent_seed_explicit, done);
    SessionLogWriter writer(path, resume.has_value());
    if (!resume) writer.header(header);
    {
      std::lock_guard lock(mu);
      logs.push_back(path);
    }

    int session_t = done.empty() ? 0 : done.back().session_t + 1;
    const std::int64_t wall_offset = done.empty() ? 0 : done.back().wall_time_ms;
    const auto started = Clock::now();

    for (;;) {
      const Message m = next_message(c);
      if (m.event == Event::ready) break;
      if (m.event == Event::rating) {
        send(c, error_message("protocol", "send ready before rating"));
        continue;
      }
      if (m.event == Event::timeout) send(c, error_message("timeout", "no ready message received"));
      close(c);
      return;
    }

    while (!block.finished()) {
      const ActionId a = block.propose();
      const ConditionProxies px = condition_proxies(a);
      send(c, {{"type", "trial_start"},
               {"trial", block.agent().state().t},
               {"condition", condition_name(a)},
               {"proxies", {{"color", px.color}, {"sound", px.sound}, {"vibration", px.vibration}}}});
      Message m;
      for (;;) {
        m = next_message(c);
        if (m.event != Event::ready) break;
      }
      if (m.event == Event::timeout) {
        send(c, error_message("timeout", "no rating received; session checkpointed"));
        close(c);
        return;
      }
      if (m.event != Event::rating) {
        close(c);
        return;
      }
      const auto elapsed =
          std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - started).count() + wall_offset;
      const TrialRecord& rec =
          block.submit(Reward::make(m.value, RewardSource::explicit_rating), elapsed, session_t++);
      writer.trial(rec);
      send(c, {{"type", "telemetry"},
               {"t", rec.t},
               {"q", rec.agent->q},
               {"alpha", rec.agent->alpha_t},
               {"epsilon", rec.agent->epsilon_t},
               {"last_reward", rec.reward}});
    }

    const auto conv = block.converged();
    const int steps = static_cast<int>(block.log().size());
    send(c, {{"type", "converged"},
             {"action", conv ? json(condition_name(*conv)) : json(nullptr)},
             {"steps", steps}});

    SessionResult result;
    result.seed = header.seed;
    result.order = header.order;
    result.agent_seed_explicit = header.agent_seed_explicit;
    result.agent_seed_implicit = header.agent_seed_implicit;
    result.explicit_log = block.log();
    result.truth = config.live.truth.value_or(config.profile.best());
    result.explicit_outcome = classify(conv, result.truth);
    if (conv) result.steps_explicit = steps;
    writer.summary(summary_to_json(result));

    {
      std::lock_guard lock(mu);
      finished.push_back(std::move(result));
      AnalysisOptions ao;
      ao.max_trials = config.agent.max_trials;
      write_json_file(opt.out_dir / "report.json", report_to_json(analyze(finished, ao)));
    }
    close(c);
  }
};

LiveServer::LiveServer(ExperimentConfig config, LiveServerOptions options)
    : impl_(std::make_unique<Impl>(std::move(config), std::move(options))) {}

LiveServer::~LiveServer() {
  stop();
  if (impl_->background.joinable()) impl_->background.join();
}

unsigned short LiveServer::port() const { return impl_->bound_port; }

void LiveServer::run() { impl_->run(); }

void LiveServer::start() {
  impl_->background = std::thread([this] { impl_->run(); });
}

void LiveServer::stop() { impl_->stop(); }

int LiveServer::sessions_completed() const {
  std::lock_guard lock(impl_->mu);
  return static_cast<int>(impl_->finished.size());
}

std::vector<std::filesystem::path> LiveServer::logs() const {
  std::lock_guard lock(impl_->mu);
  return impl_->logs;
}

}  // namespace neuroadapt
