#include "neuroadapt/cli.hpp"

#include "neuroadapt/analysis.hpp"
#include "neuroadapt/config.hpp"
#include "neuroadapt/io.hpp"
#include "neuroadapt/live_server.hpp"
#include "neuroadapt/monte_carlo.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <pthread.h>
#include <regex>
#include <set>
#include <string>
#include <thread>

namespace neuroadapt {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Failure carrying the JSON error payload.
struct CliError {
  json payload;
  int code{1};
};

CliError make_error(std::string kind, const std::string& message) {
  return {{{"error", std::move(kind)}, {"message", message}}, 1};
}

std::string numbered(std::string_view stem, int i, std::string_view ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*s_%04d%.*s", static_cast<int>(stem.size()), stem.data(), i,
                static_cast<int>(ext.size()), ext.data());
  return buf;
}

struct ConfigSource {
  std::string path;
  std::string preset;
  std::optional<std::uint64_t> seed;
};

ExperimentConfig load_experiment(const ConfigSource& src) {
  if (src.path.empty() == src.preset.empty()) throw make_error("usage", "pass exactly one of --config or --preset");
  ExperimentConfig cfg = src.path.empty() ? load_preset(src.preset) : load_config(src.path);
  if (src.seed) cfg.seed = *src.seed;
  cfg.validate();
  return cfg;
}

// Creates `dir`; when files matching `patterns` exist, either removes them
// (force) or fails.
void prepare_out_dir(const fs::path& dir, const std::vector<std::regex>& patterns, bool force) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw make_error("io", "cannot create output directory " + dir.string() + ": " + ec.message());
  std::vector<fs::path> existing;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    for (const auto& re : patterns) {
      if (std::regex_match(name, re)) {
        existing.push_back(entry.path());
        break;
      }
    }
  }
  if (existing.empty()) return;
  if (!force) {
    CliError e = make_error("exists", "output directory " + dir.string() + " already contains " +
                                          existing.front().filename().string() + "; pass --force to overwrite");
    e.payload["path"] = existing.front().string();
    throw e;
  }
  for (const auto& p : existing) fs::remove(p);
}

std::string fmt(double v, int digits = 3) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

void print_report(std::ostream& out, const AnalysisReport& r) {
  out << "runs: " << r.n_runs << "\n";
  auto block = [&](const char* name, const BlockStats& b) {
    out << name << ": converged " << fmt(100.0 * b.converged_rate, 1) << "%, correct "
        << fmt(100.0 * b.correct_rate, 1) << "%";
    if (b.steps.n > 0) out << ", steps " << fmt(b.steps.mean, 2) << " (SD " << fmt(b.steps.sd, 2) << ")";
    out << "\n";
  };
  block("explicit", r.explicit_block);
  block("implicit", r.implicit_block);
  out << "step difference (implicit - explicit): n = " << r.step_diff.n << ", mean " << fmt(r.step_diff.mean, 2)
      << ", SD " << fmt(r.step_diff.sd, 2) << "\n";
  if (r.tost) {
    out << "TOST +/-" << r.tost->bound << ": t_lower = " << fmt(r.tost->t_lower) << " (p " << fmt(r.tost->p_lower)
        << "), t_upper = " << fmt(r.tost->t_upper) << " (p " << fmt(r.tost->p_upper) << "), "
        << (r.tost->equivalent ? "equivalent" : "not equivalent") << "\n";
  }
  out << "contingency (rows explicit, columns implicit: correct / incorrect / not converged)\n";
  for (const auto& row : r.table) out << "  " << row[0] << " " << row[1] << " " << row[2] << "\n";
}

// ---- simulate -------------------------------------------------------------

struct SimulateArgs {
  ConfigSource src;
  int runs{1};
  std::string out;
  bool force{false};
  int parallelism{0};
  bool save_datasets{false};
  std::string non_converged{"exclude"};
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  const ExperimentConfig cfg = load_experiment(a.src);
  if (a.runs < 1) throw make_error("usage", "--runs must be >= 1");
  const fs::path dir(a.out);
  prepare_out_dir(dir,
                  {std::regex(R"(session_\d+\.jsonl)"), std::regex(R"(dataset_\d+\.jsonl)"),
                   std::regex("report\\.json"), std::regex("steps\\.csv"), std::regex("contingency\\.csv")},
                  a.force);

  MonteCarloOptions mo;
  mo.exec = a.parallelism == 1 ? Execution::serial : Execution::parallel;
  mo.parallelism = a.parallelism;
  mo.analysis.max_trials = cfg.agent.max_trials;
  mo.analysis.policy = parse_non_converged(a.non_converged);
  mo.keep_training_epochs = a.save_datasets;
  const auto seeds = seed_range(cfg.seed, a.runs);
  const MonteCarloResult mc = monte_carlo(cfg, seeds, mo);

  for (std::size_t i = 0; i < mc.sessions.size(); ++i) {
    const int idx = static_cast<int>(i);
    write_session_log(dir / numbered("session", idx, ".jsonl"), make_header(cfg, mc.sessions[i], idx), mc.sessions[i]);
    if (a.save_datasets) write_dataset(dir / numbered("dataset", idx, ".jsonl"), mc.training_epochs[i]);
  }
  json report = report_to_json(mc.report);
  report["config_fingerprint"] = config_fingerprint(cfg);
  report["seeds"] = seeds;
  write_json_file(dir / "report.json", report);
  write_steps_csv(dir / "steps.csv", mc.sessions);
  write_contingency_csv(dir / "contingency.csv", mc.report.table);

  print_report(out, mc.report);
  out << "wrote " << mc.sessions.size() << " session log(s) and report.json to " << dir.string() << "\n";
  return 0;
}

// ---- train-decoder --------------------------------------------------------

struct TrainArgs {
  std::string dataset;
  std::string out;
  std::uint64_t seed{1};
  bool force{false};
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  const std::vector<Epoch> epochs = read_dataset(a.dataset);
  std::set<int> ids;
  for (const auto& e : epochs) {
    if (!ids.insert(e.trial_id).second) {
      CliError err = make_error("format", "trial " + std::to_string(e.trial_id) + ": duplicate trial_id");
      err.payload["trial_id"] = e.trial_id;
      throw err;
    }
  }
  const PreparedDataset prepared = prepare_dataset(epochs);
  const auto [n0, n1] = prepared.data.class_counts();
  if (n0 == 0 || n1 == 0) {
    throw make_error("data", "dataset has a single class after preprocessing (" + std::to_string(n0) + " / " +
                                 std::to_string(n1) + " trials)");
  }

  const fs::path dir(a.out);
  prepare_out_dir(dir, {std::regex("decoder\\.json"), std::regex("metrics\\.json")}, a.force);

  Rng rng(derive_seed(a.seed, "decoder/split"));
  const GridSearchReport rep = grid_search(prepared.data, rng);
  std::vector<double> normalized;
  for (double s : rep.test_raw_scores) normalized.push_back(normalize_score(rep.bundle, s));

  json metrics;
  metrics["cv_accuracy"] = rep.bundle.cv_accuracy;
  metrics["cv_f1"] = rep.bundle.cv_f1;
  metrics["held_out_normalized"] = metrics_to_json(compute_metrics(normalized, rep.test_labels));
  json cands = json::array();
  for (const auto& c : rep.candidates) {
    cands.push_back({{"n_features", c.n_features}, {"accuracy", c.accuracy}, {"f1", c.f1}, {"lambda", c.lambda}});
  }
  metrics["candidates"] = cands;
  metrics["train_trial_ids"] = rep.train_trial_ids;
  metrics["test_trial_ids"] = rep.test_trial_ids;
  metrics["rejected_amplitude"] = prepared.rejected_amplitude;
  metrics["rejected_behavior"] = prepared.rejected_behavior;
  metrics["n_class0"] = n0;
  metrics["n_class1"] = n1;

  save_bundle(dir / "decoder.json", rep.bundle);
  write_json_file(dir / "metrics.json", metrics);
  out << "trials: " << epochs.size() << " (rejected " << prepared.rejected_amplitude.size() << " amplitude, "
      << prepared.rejected_behavior.size() << " behavioural)\n"
      << "selected features: " << rep.bundle.selected_features.size() << ", shrinkage " << fmt(rep.bundle.shrinkage_lambda)
      << "\n"
      << "held-out accuracy: " << fmt(rep.bundle.cv_accuracy) << "\n"
      << "held-out F1: " << fmt(rep.bundle.cv_f1) << "\n";
  return 0;
}

// ---- run-session ----------------------------------------------------------

struct SessionArgs {
  ConfigSource src;
  std::string listen{"127.0.0.1:8765"};
  std::string out;
  bool force{false};
  bool resume{false};
};

int cmd_run_session(const SessionArgs& a, std::ostream& out) {
  const ExperimentConfig cfg = load_experiment(a.src);
  const auto colon = a.listen.rfind(':');
  if (colon == std::string::npos) throw make_error("usage", "--listen expects HOST:PORT");
  LiveServerOptions lo;
  lo.host = a.listen.substr(0, colon);
  try {
    const int port = std::stoi(a.listen.substr(colon + 1));
    if (port < 0 || port > 65535) throw std::out_of_range("port");
    lo.port = static_cast<unsigned short>(port);
  } catch (const std::exception&) {
    throw make_error("usage", "--listen: invalid port in '" + a.listen + "'");
  }
  lo.out_dir = a.out;
  lo.force = a.force;
  lo.resume = a.resume;

  // SIGINT/SIGTERM are taken by a waiter thread that stops the server.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  LiveServer server(cfg, lo);
  out << "listening on " << lo.host << ":" << server.port() << ", logs in " << lo.out_dir.string() << std::endl;
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&set, &sig);
    server.stop();
  });
  server.run();
  // run() only returns after stop(); wake the waiter if it is still blocked
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  out << "sessions completed: " << server.sessions_completed() << std::endl;
  return 0;
}

// ---- analyze --------------------------------------------------------------

struct AnalyzeArgs {
  std::string dir;
  std::string out;
  std::string non_converged{"exclude"};
  std::string tails{"two-sided"};
  double bound{5.0};
  bool force{false};
};

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out) {
  std::vector<fs::path> logs;
  if (!fs::is_directory(a.dir)) throw make_error("io", "not a directory: " + a.dir);
  const std::regex log_re(R"((session|live)_\d+\.jsonl)");
  for (const auto& entry : fs::directory_iterator(a.dir)) {
    if (std::regex_match(entry.path().filename().string(), log_re)) logs.push_back(entry.path());
  }
  std::sort(logs.begin(), logs.end());
  if (logs.empty()) throw make_error("io", "no session logs in " + a.dir);

  std::vector<SessionResult> results;
  int max_trials = 0;
  for (const auto& p : logs) {
    try {
      const SessionLog log = read_session_log(p);
      max_trials = std::max(max_trials, log.header.agent.max_trials);
      results.push_back(session_result_from_log(log));
    } catch (const FormatError& e) {
      CliError err = make_error("format", p.filename().string() + ": " + e.what());
      err.payload["file"] = p.string();
      if (e.line() > 0) err.payload["line"] = e.line();
      throw err;
    }
  }

  AnalysisOptions ao;
  ao.policy = parse_non_converged(a.non_converged);
  ao.tails = parse_tost_tails(a.tails);
  ao.tost_bound = a.bound;
  ao.max_trials = max_trials;
  const AnalysisReport rep = analyze(results, ao);

  const fs::path dir(a.out);
  prepare_out_dir(dir, {std::regex("report\\.json"), std::regex("steps\\.csv"), std::regex("contingency\\.csv")},
                  a.force);
  write_json_file(dir / "report.json", report_to_json(rep));
  write_steps_csv(dir / "steps.csv", results);
  write_contingency_csv(dir / "contingency.csv", rep.table);
  print_report(out, rep);
  return 0;
}

// ---- replay ---------------------------------------------------------------

int cmd_replay(const std::string& path, std::ostream& out) {
  const SessionLog log = read_session_log(path);
  bool ok = true;
  json mismatches = json::array();
  auto check = [&](const char* name, const std::vector<TrialRecord>& recs, std::uint64_t seed) {
    const ReplayReport r = replay_block(log.header.agent, seed, recs);
    out << name << ": " << r.trials_checked << " trial(s) " << (r.identical ? "reproduced bit-exactly" : "DIFFER");
    if (!r.identical) {
      out << " at trial " << *r.first_mismatch << " (" << r.reason << ")";
      mismatches.push_back({{"block", name}, {"trial", *r.first_mismatch}, {"reason", r.reason}});
      ok = false;
    }
    out << "\n";
  };
  check("explicit", log.explicit_log, log.header.agent_seed_explicit);
  check("implicit", log.implicit_log, log.header.agent_seed_implicit);
  if (!ok) {
    CliError e = make_error("replay_mismatch", "session log does not replay bit-exactly");
    e.payload["mismatches"] = mismatches;
    throw e;
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Closed-loop interface adaptation: simulation, decoder training, live sessions, analysis"};
  app.require_subcommand(1, 1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run seeded simulated sessions and write logs + report");
  simulate->add_option("--config", sim.src.path, "Experiment config file");
  simulate->add_option("--preset", sim.src.preset, "Named preset instead of a config file");
  simulate->add_option("--seed", sim.src.seed, "Base seed (overrides the config)");
  simulate->add_option("--runs", sim.runs, "Number of sessions")->check(CLI::PositiveNumber);
  simulate->add_option("--out", sim.out, "Output directory")->required();
  simulate->add_flag("--force", sim.force, "Overwrite existing outputs");
  simulate->add_option("--parallelism", sim.parallelism, "Worker threads (0 = all, 1 = serial)")
      ->check(CLI::NonNegativeNumber);
  simulate->add_flag("--save-datasets", sim.save_datasets, "Also write each run's training epochs");
  simulate->add_option("--non-converged", sim.non_converged, "exclude | impute-max-trials");

  TrainArgs tr;
  auto* train = app.add_subcommand("train-decoder", "Fit the shrinkage-LDA decoder on a JSONL dataset");
  train->add_option("dataset", tr.dataset, "Dataset (JSON Lines)")->required();
  train->add_option("--out", tr.out, "Output directory")->required();
  train->add_option("--seed", tr.seed, "Split seed");
  train->add_flag("--force", tr.force, "Overwrite existing outputs");

  SessionArgs ss;
  auto* session = app.add_subcommand("run-session", "Serve live sessions to the browser console");
  session->add_option("--config", ss.src.path, "Experiment config file");
  session->add_option("--preset", ss.src.preset, "Named preset instead of a config file");
  session->add_option("--seed", ss.src.seed, "Base seed (overrides the config)");
  session->add_option("--listen", ss.listen, "HOST:PORT");
  session->add_option("--out", ss.out, "Output directory")->required();
  session->add_flag("--force", ss.force, "Replace existing logs");
  session->add_flag("--resume", ss.resume, "Continue the newest unfinished log");

  AnalyzeArgs an;
  auto* analyze_cmd = app.add_subcommand("analyze", "Statistics over a directory of session logs");
  analyze_cmd->add_option("dir", an.dir, "Directory with session logs")->required();
  analyze_cmd->add_option("--out", an.out, "Output directory")->required();
  analyze_cmd->add_option("--non-converged", an.non_converged, "exclude | impute-max-trials");
  analyze_cmd->add_option("--tost-tails", an.tails, "two-sided | one-sided");
  analyze_cmd->add_option("--tost-bound", an.bound, "Equivalence bound in steps");
  analyze_cmd->add_flag("--force", an.force, "Overwrite existing outputs");

  std::string replay_path;
  auto* replay = app.add_subcommand("replay", "Check that a session log replays bit-exactly");
  replay->add_option("log", replay_path, "Session log")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << json{{"error", "usage"}, {"message", e.what()}}.dump() << std::endl;
    return 2;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(sim, out);
    if (train->parsed()) return cmd_train(tr, out);
    if (session->parsed()) return cmd_run_session(ss, out);
    if (analyze_cmd->parsed()) return cmd_analyze(an, out);
    if (replay->parsed()) return cmd_replay(replay_path, out);
    return 2;
  } catch (const CliError& e) {
    err << e.payload.dump() << std::endl;
    return e.payload.value("error", "") == "usage" ? 2 : e.code;
  } catch (const ConfigError& e) {
    err << json{{"error", "config"}, {"key", e.key()}, {"message", e.what()}}.dump() << std::endl;
  } catch (const FormatError& e) {
    json j{{"error", "format"}, {"message", e.what()}};
    if (e.line() > 0) j["line"] = e.line();
    if (e.trial_id()) j["trial_id"] = *e.trial_id();
    err << j.dump() << std::endl;
  } catch (const std::invalid_argument& e) {
    err << json{{"error", "invalid"}, {"message", e.what()}}.dump() << std::endl;
  } catch (const fs::filesystem_error& e) {
    err << json{{"error", "io"}, {"message", e.what()}}.dump() << std::endl;
  } catch (const std::exception& e) {
    err << json{{"error", "runtime"}, {"message", e.what()}}.dump() << std::endl;
  }
  return 1;
}

}  // namespace neuroadapt
