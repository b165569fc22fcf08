#pragma once

#include "neuroadapt/config.hpp"
#include "neuroadapt/decoder.hpp"
#include "neuroadapt/session.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace neuroadapt {

inline constexpr int kLogSchemaVersion = 1;

// Malformed input file. line() is 1-based (0 when not line-specific);
// trial_id() is set when the problem belongs to one trial.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& msg, std::size_t line = 0, std::optional<int> trial_id = std::nullopt)
      : std::runtime_error(msg), line_(line), trial_id_(trial_id) {}
  std::size_t line() const { return line_; }
  std::optional<int> trial_id() const { return trial_id_; }

 private:
  std::size_t line_;
  std::optional<int> trial_id_;
};

// ---- datasets -------------------------------------------------------------
//
// One JSON object per line:
//   {"trial_id": 7, "condition": 2, "raw_score": 0.61, "label": 1,
//    "placement_error": 1.3, "epoch": [[250 samples] x 64 channels]}
// label and placement_error are optional; condition is an index or a name.

nlohmann::json epoch_to_json(const Epoch& e);
Epoch epoch_from_json(const nlohmann::json& j);  // throws FormatError
void write_dataset(const std::filesystem::path& path, std::span<const Epoch> epochs);
std::vector<Epoch> read_dataset(const std::filesystem::path& path);

// ---- decoder bundle -------------------------------------------------------

nlohmann::json bundle_to_json(const DecoderBundle& b);
DecoderBundle bundle_from_json(const nlohmann::json& j);
void save_bundle(const std::filesystem::path& path, const DecoderBundle& b);
DecoderBundle load_bundle(const std::filesystem::path& path);

nlohmann::json metrics_to_json(const MetricsReport& m);

// ---- session logs ---------------------------------------------------------
//
// JSON Lines: one header, then one record per trial in session order, then
// (for completed sessions) one summary. Live and simulated sessions share
// the schema; only header.mode differs.

struct SessionHeader {
  std::string mode{"simulated"};  // or "live"
  std::uint64_t seed{0};
  int run_index{0};
  std::string config_fingerprint;
  nlohmann::json config;  // full effective config
  AgentConfig agent;
  std::uint64_t agent_seed_explicit{0};
  std::uint64_t agent_seed_implicit{0};
  BlockOrder order{BlockOrder::explicit_first};
};

nlohmann::json header_to_json(const SessionHeader& h);
SessionHeader header_from_json(const nlohmann::json& j);
nlohmann::json trial_to_json(const TrialRecord& r);
TrialRecord trial_from_json(const nlohmann::json& j);
nlohmann::json summary_to_json(const SessionResult& r);

struct SessionLog {
  SessionHeader header;
  std::vector<TrialRecord> training;
  std::vector<TrialRecord> explicit_log;
  std::vector<TrialRecord> implicit_log;
  std::optional<nlohmann::json> summary;
};

// Throws FormatError naming the offending line.
SessionLog read_session_log(const std::filesystem::path& path);

// Rebuilds the result recorded in a log. Outcomes come from the summary
// when present, otherwise from the trial records and `truth`.
SessionResult session_result_from_log(const SessionLog& log, std::optional<ActionId> truth = std::nullopt);

SessionHeader make_header(const ExperimentConfig& config, const SessionResult& r, int run_index,
                          std::string mode = "simulated");

// Whole simulated session in one go (header, all trials in session order,
// summary).
void write_session_log(const std::filesystem::path& path, const SessionHeader& header, const SessionResult& r);

// Append-only writer for live sessions; every line is flushed immediately
// so the file is a valid checkpoint after each trial.
class SessionLogWriter {
 public:
  // append = true continues an existing log (no new header).
  SessionLogWriter(const std::filesystem::path& path, bool append);
  void header(const SessionHeader& h);
  void trial(const TrialRecord& r);
  void summary(const nlohmann::json& s);

 private:
  void line(const nlohmann::json& j);
  std::filesystem::path path_;
  std::ofstream out_;
};

// JSON text with a trailing newline, written atomically enough for our use
// (temp file + rename).
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace neuroadapt
