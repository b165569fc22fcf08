#include "neuroadapt/io.hpp"

#include <cmath>
#include <sstream>
#include <system_error>

namespace neuroadapt {

using nlohmann::json;

namespace {

std::string trial_prefix(int id) { return "trial " + std::to_string(id) + ": "; }

ActionId condition_from_json(const json& j) {
  if (j.is_number_integer()) {
    const ActionId a{j.get<int>()};
    if (!is_valid(a)) throw std::invalid_argument("condition index out of range");
    return a;
  }
  if (j.is_string()) return parse_condition(j.get<std::string>());
  throw std::invalid_argument("condition must be an index or a name");
}

json optional_action(const std::optional<ActionId>& a) { return a ? json(a->index) : json(nullptr); }

std::optional<ActionId> optional_action_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return condition_from_json(j);
}

json optional_int(const std::optional<int>& v) { return v ? json(*v) : json(nullptr); }

std::optional<int> optional_int_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<int>();
}

}  // namespace

// ---- datasets -------------------------------------------------------------

json epoch_to_json(const Epoch& e) {
  json rows = json::array();
  for (int ch = 0; ch < kChannels; ++ch) {
    const auto c = e.channel(ch);
    rows.push_back(std::vector<double>(c.begin(), c.end()));
  }
  json j = {{"trial_id", e.trial_id}, {"condition", e.condition.index}, {"raw_score", e.raw_score}};
  if (e.label) j["label"] = *e.label;
  if (e.placement_error) j["placement_error"] = *e.placement_error;
  j["epoch"] = std::move(rows);
  return j;
}

Epoch epoch_from_json(const json& j) {
  if (!j.is_object()) throw FormatError("dataset record must be a JSON object");
  if (!j.contains("trial_id") || !j["trial_id"].is_number_integer()) {
    throw FormatError("dataset record lacks an integer trial_id");
  }
  Epoch e;
  e.trial_id = j["trial_id"].get<int>();
  const auto fail = [&](const std::string& msg) { return FormatError(trial_prefix(e.trial_id) + msg, 0, e.trial_id); };

  try {
    if (!j.contains("condition")) throw fail("missing condition");
    e.condition = condition_from_json(j["condition"]);
  } catch (const std::invalid_argument& ex) {
    throw fail(ex.what());
  }
  if (!j.contains("raw_score") || !j["raw_score"].is_number()) throw fail("missing numeric raw_score");
  e.raw_score = j["raw_score"].get<double>();
  if (!std::isfinite(e.raw_score)) throw fail("raw_score must be finite");
  if (j.contains("label") && !j["label"].is_null()) {
    if (!j["label"].is_number_integer()) throw fail("label must be 0 or 1");
    const int l = j["label"].get<int>();
    if (l != 0 && l != 1) throw fail("label must be 0 or 1, got " + std::to_string(l));
    e.label = l;
  }
  if (j.contains("placement_error") && !j["placement_error"].is_null()) {
    if (!j["placement_error"].is_number()) throw fail("placement_error must be a number");
    e.placement_error = j["placement_error"].get<double>();
  }

  if (!j.contains("epoch") || !j["epoch"].is_array()) throw fail("missing epoch array");
  const json& rows = j["epoch"];
  if (rows.size() != static_cast<std::size_t>(kChannels)) {
    throw fail("epoch must have " + std::to_string(kChannels) + " channels, got " + std::to_string(rows.size()));
  }
  for (int ch = 0; ch < kChannels; ++ch) {
    const json& row = rows[static_cast<std::size_t>(ch)];
    if (!row.is_array() || row.size() != static_cast<std::size_t>(kSamples)) {
      throw fail("channel " + std::to_string(ch) + " must have " + std::to_string(kSamples) + " samples");
    }
    for (int s = 0; s < kSamples; ++s) {
      const json& v = row[static_cast<std::size_t>(s)];
      if (!v.is_number()) throw fail("channel " + std::to_string(ch) + " has a non-numeric sample");
      e.at(ch, s) = v.get<double>();
    }
  }
  try {
    validate_epoch(e);
  } catch (const std::invalid_argument& ex) {
    throw FormatError(ex.what(), 0, e.trial_id);
  }
  return e;
}

void write_dataset(const std::filesystem::path& path, std::span<const Epoch> epochs) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  for (const auto& e : epochs) f << epoch_to_json(e).dump() << '\n';
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

std::vector<Epoch> read_dataset(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open dataset " + path.string());
  std::vector<Epoch> out;
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(f, text)) {
    ++line_no;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& ex) {
      throw FormatError("line " + std::to_string(line_no) + ": malformed JSON (" + ex.what() + ")", line_no);
    }
    try {
      out.push_back(epoch_from_json(j));
    } catch (const FormatError& ex) {
      throw FormatError("line " + std::to_string(line_no) + ": " + ex.what(), line_no, ex.trial_id());
    } catch (const json::exception& ex) {
      throw FormatError("line " + std::to_string(line_no) + ": " + ex.what(), line_no);
    }
  }
  if (out.empty()) throw FormatError("dataset " + path.string() + " contains no trials");
  return out;
}

// ---- decoder bundle -------------------------------------------------------

json bundle_to_json(const DecoderBundle& b) {
  json feats = json::array();
  for (const auto& f : b.selected_features) feats.push_back({f.channel, f.window});
  return {{"schema_version", kLogSchemaVersion},
          {"selected_features", feats},
          {"lda_weights", b.lda_weights},
          {"lda_bias", b.lda_bias},
          {"shrinkage_lambda", b.shrinkage_lambda},
          {"norm_lo", b.norm_lo},
          {"norm_hi", b.norm_hi},
          {"cv_accuracy", b.cv_accuracy},
          {"cv_f1", b.cv_f1},
          {"config_fingerprint", b.config_fingerprint},
          {"created_at", b.created_at}};
}

DecoderBundle bundle_from_json(const json& j) {
  try {
    DecoderBundle b;
    for (const auto& f : j.at("selected_features")) {
      const FeatureIndex fi{f.at(0).get<int>(), f.at(1).get<int>()};
      if (fi.channel < 0 || fi.channel >= kChannels || fi.window < 0 || fi.window >= kFeatureWindows) {
        throw FormatError("bundle: selected feature out of range");
      }
      b.selected_features.push_back(fi);
    }
    b.lda_weights = j.at("lda_weights").get<std::vector<double>>();
    if (b.lda_weights.size() != b.selected_features.size()) {
      throw FormatError("bundle: lda_weights and selected_features differ in length");
    }
    b.lda_bias = j.at("lda_bias").get<double>();
    b.shrinkage_lambda = j.at("shrinkage_lambda").get<double>();
    b.norm_lo = j.at("norm_lo").get<double>();
    b.norm_hi = j.at("norm_hi").get<double>();
    b.cv_accuracy = j.at("cv_accuracy").get<double>();
    b.cv_f1 = j.at("cv_f1").get<double>();
    b.config_fingerprint = j.value("config_fingerprint", "");
    b.created_at = j.value("created_at", "");
    return b;
  } catch (const json::exception& ex) {
    throw FormatError(std::string("bundle: ") + ex.what());
  }
}

void save_bundle(const std::filesystem::path& path, const DecoderBundle& b) { write_json_file(path, bundle_to_json(b)); }

DecoderBundle load_bundle(const std::filesystem::path& path) { return bundle_from_json(read_json_file(path)); }

json metrics_to_json(const MetricsReport& m) {
  json roc = json::array();
  for (const auto& p : m.roc_points) roc.push_back({p.fpr, p.tpr});
  return {{"accuracy", m.accuracy}, {"f1", m.f1}, {"auc", m.auc}, {"roc", roc}};
}

// ---- session logs ---------------------------------------------------------

json header_to_json(const SessionHeader& h) {
  return {{"record", "header"},
          {"schema_version", kLogSchemaVersion},
          {"mode", h.mode},
          {"seed", h.seed},
          {"run_index", h.run_index},
          {"config_fingerprint", h.config_fingerprint},
          {"config", h.config},
          {"agent", agent_config_to_json(h.agent)},
          {"agent_seed_explicit", h.agent_seed_explicit},
          {"agent_seed_implicit", h.agent_seed_implicit},
          {"block_order", block_order_name(h.order)}};
}

SessionHeader header_from_json(const json& j) {
  const int version = j.at("schema_version").get<int>();
  if (version != kLogSchemaVersion) {
    throw FormatError("unsupported log schema_version " + std::to_string(version));
  }
  SessionHeader h;
  h.mode = j.at("mode").get<std::string>();
  h.seed = j.at("seed").get<std::uint64_t>();
  h.run_index = j.value("run_index", 0);
  h.config_fingerprint = j.value("config_fingerprint", "");
  h.config = j.value("config", json::object());
  h.agent = agent_config_from_json(j.at("agent"));
  h.agent_seed_explicit = j.at("agent_seed_explicit").get<std::uint64_t>();
  h.agent_seed_implicit = j.at("agent_seed_implicit").get<std::uint64_t>();
  h.order = parse_block_order(j.at("block_order").get<std::string>());
  return h;
}

json trial_to_json(const TrialRecord& r) {
  json j = {{"record", "trial"},
            {"block", block_name(r.block)},
            {"t", r.t},
            {"session_t", r.session_t},
            {"condition", r.condition.index},
            {"reward", r.reward}};
  if (r.agent) {
    j["q"] = r.agent->q;
    j["alpha"] = r.agent->alpha_t;
    j["epsilon"] = r.agent->epsilon_t;
    j["converged"] = optional_action(r.converged);
  }
  j["wall_time_ms"] = r.wall_time_ms;
  return j;
}

TrialRecord trial_from_json(const json& j) {
  TrialRecord r;
  r.block = parse_block(j.at("block").get<std::string>());
  r.t = j.at("t").get<int>();
  r.session_t = j.at("session_t").get<int>();
  r.condition = condition_from_json(j.at("condition"));
  r.reward = j.at("reward").get<double>();
  if (j.contains("q")) {
    AgentSnapshot s;
    s.q = j.at("q").get<std::array<double, kNumActions>>();
    s.alpha_t = j.at("alpha").get<double>();
    s.epsilon_t = j.at("epsilon").get<double>();
    r.agent = s;
    r.converged = optional_action_from(j.at("converged"));
  } else if (r.block != Block::training) {
    throw FormatError("adaptive trial record lacks the agent snapshot");
  }
  r.wall_time_ms = j.at("wall_time_ms").get<std::int64_t>();
  return r;
}

namespace {

json training_summary_json(const TrainingSummary& s) {
  return {{"n_trials", s.n_trials},
          {"n_rejected_amplitude", s.n_rejected_amplitude},
          {"n_rejected_behavior", s.n_rejected_behavior},
          {"n_retained", s.n_retained},
          {"n_class0", s.n_class0},
          {"n_class1", s.n_class1},
          {"split_threshold", s.split_threshold},
          {"condition_mean_score", s.condition_mean_score}};
}

TrainingSummary training_summary_from(const json& j) {
  TrainingSummary s;
  s.n_trials = j.at("n_trials").get<int>();
  s.n_rejected_amplitude = j.at("n_rejected_amplitude").get<int>();
  s.n_rejected_behavior = j.at("n_rejected_behavior").get<int>();
  s.n_retained = j.at("n_retained").get<int>();
  s.n_class0 = j.at("n_class0").get<int>();
  s.n_class1 = j.at("n_class1").get<int>();
  // NaN (no split) is written as null
  s.split_threshold = j.at("split_threshold").is_null() ? std::nan("") : j.at("split_threshold").get<double>();
  s.condition_mean_score = j.at("condition_mean_score").get<std::array<double, kNumActions>>();
  return s;
}

json bundle_summary_json(const BundleSummary& b) {
  json feats = json::array();
  for (const auto& f : b.selected_features) feats.push_back({f.channel, f.window});
  return {{"n_features", b.n_features}, {"shrinkage_lambda", b.shrinkage_lambda},
          {"cv_accuracy", b.cv_accuracy}, {"cv_f1", b.cv_f1},
          {"norm_lo", b.norm_lo},         {"norm_hi", b.norm_hi},
          {"selected_features", feats}};
}

BundleSummary bundle_summary_from(const json& j) {
  BundleSummary b;
  b.n_features = j.at("n_features").get<int>();
  b.shrinkage_lambda = j.at("shrinkage_lambda").get<double>();
  b.cv_accuracy = j.at("cv_accuracy").get<double>();
  b.cv_f1 = j.at("cv_f1").get<double>();
  b.norm_lo = j.at("norm_lo").get<double>();
  b.norm_hi = j.at("norm_hi").get<double>();
  for (const auto& f : j.at("selected_features")) b.selected_features.push_back({f.at(0).get<int>(), f.at(1).get<int>()});
  return b;
}

}  // namespace

json summary_to_json(const SessionResult& r) {
  return {{"record", "summary"},
          {"seed", r.seed},
          {"block_order", block_order_name(r.order)},
          {"truth", r.truth.index},
          {"explicit_outcome", outcome_name(r.explicit_outcome)},
          {"implicit_outcome", outcome_name(r.implicit_outcome)},
          {"steps_explicit", optional_int(r.steps_explicit)},
          {"steps_implicit", optional_int(r.steps_implicit)},
          {"training", training_summary_json(r.training)},
          {"bundle", bundle_summary_json(r.bundle)}};
}

SessionLog read_session_log(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open session log " + path.string());
  SessionLog log;
  bool have_header = false;
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(f, text)) {
    ++line_no;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = [&] { return "line " + std::to_string(line_no) + ": "; };
    try {
      const json j = json::parse(text);
      const std::string kind = j.at("record").get<std::string>();
      if (kind == "header") {
        if (have_header) throw FormatError(where() + "second header record", line_no);
        log.header = header_from_json(j);
        have_header = true;
        continue;
      }
      if (!have_header) throw FormatError(where() + "log must start with a header record", line_no);
      if (log.summary) throw FormatError(where() + "record after the summary", line_no);
      if (kind == "trial") {
        TrialRecord r = trial_from_json(j);
        auto& dest = r.block == Block::training          ? log.training
                     : r.block == Block::explicit_feedback ? log.explicit_log
                                                           : log.implicit_log;
        if (!dest.empty() && r.t != dest.back().t + 1) {
          throw FormatError(where() + "trial index " + std::to_string(r.t) + " does not follow " +
                                std::to_string(dest.back().t),
                            line_no);
        }
        if (dest.empty() && r.t != 0) throw FormatError(where() + "block must start at t = 0", line_no);
        dest.push_back(r);
      } else if (kind == "summary") {
        log.summary = j;
      } else {
        throw FormatError(where() + "unknown record type '" + kind + "'", line_no);
      }
    } catch (const FormatError& ex) {
      if (ex.line() != 0) throw;
      throw FormatError(where() + ex.what(), line_no);
    } catch (const std::exception& ex) {
      throw FormatError(where() + ex.what(), line_no);
    }
  }
  if (!have_header) throw FormatError("session log " + path.string() + " has no header");
  return log;
}

SessionResult session_result_from_log(const SessionLog& log, std::optional<ActionId> truth) {
  SessionResult r;
  r.seed = log.header.seed;
  r.order = log.header.order;
  r.agent_seed_explicit = log.header.agent_seed_explicit;
  r.agent_seed_implicit = log.header.agent_seed_implicit;
  r.training_log = log.training;
  r.explicit_log = log.explicit_log;
  r.implicit_log = log.implicit_log;
  if (log.summary) {
    const json& s = *log.summary;
    r.truth = condition_from_json(s.at("truth"));
    r.explicit_outcome = parse_outcome(s.at("explicit_outcome").get<std::string>());
    r.implicit_outcome = parse_outcome(s.at("implicit_outcome").get<std::string>());
    r.steps_explicit = optional_int_from(s.at("steps_explicit"));
    r.steps_implicit = optional_int_from(s.at("steps_implicit"));
    if (s.contains("training")) r.training = training_summary_from(s.at("training"));
    if (s.contains("bundle")) r.bundle = bundle_summary_from(s.at("bundle"));
    return r;
  }
  if (truth) r.truth = *truth;
  auto finish = [&](const std::vector<TrialRecord>& recs, Outcome& o, std::optional<int>& steps) {
    const std::optional<ActionId> conv = recs.empty() ? std::nullopt : recs.back().converged;
    o = classify(conv, truth);
    if (conv) steps = static_cast<int>(recs.size());
  };
  finish(r.explicit_log, r.explicit_outcome, r.steps_explicit);
  finish(r.implicit_log, r.implicit_outcome, r.steps_implicit);
  return r;
}

SessionHeader make_header(const ExperimentConfig& config, const SessionResult& r, int run_index, std::string mode) {
  SessionHeader h;
  h.mode = std::move(mode);
  h.seed = r.seed;
  h.run_index = run_index;
  h.config_fingerprint = config_fingerprint(config);
  h.config = config_to_json(config);
  h.agent = config.agent;
  h.agent_seed_explicit = r.agent_seed_explicit;
  h.agent_seed_implicit = r.agent_seed_implicit;
  h.order = r.order;
  return h;
}

void write_session_log(const std::filesystem::path& path, const SessionHeader& header, const SessionResult& r) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << header_to_json(header).dump() << '\n';
  for (const auto& rec : r.training_log) f << trial_to_json(rec).dump() << '\n';
  const auto& first = r.order == BlockOrder::implicit_first ? r.implicit_log : r.explicit_log;
  const auto& second = r.order == BlockOrder::implicit_first ? r.explicit_log : r.implicit_log;
  for (const auto& rec : first) f << trial_to_json(rec).dump() << '\n';
  for (const auto& rec : second) f << trial_to_json(rec).dump() << '\n';
  f << summary_to_json(r).dump() << '\n';
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

SessionLogWriter::SessionLogWriter(const std::filesystem::path& path, bool append)
    : path_(path), out_(path, std::ios::binary | (append ? std::ios::app : std::ios::trunc)) {
  if (!out_) throw std::runtime_error("cannot open session log " + path.string());
}

void SessionLogWriter::line(const json& j) {
  out_ << j.dump() << '\n';
  out_.flush();
  if (!out_) throw std::runtime_error("write failed: " + path_.string());
}

void SessionLogWriter::header(const SessionHeader& h) { line(header_to_json(h)); }
void SessionLogWriter::trial(const TrialRecord& r) { line(trial_to_json(r)); }
void SessionLogWriter::summary(const json& s) { line(s); }

void write_json_file(const std::filesystem::path& path, const json& j) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << j.dump(2) << '\n';
    if (!f) throw std::runtime_error("write failed: " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw std::runtime_error("cannot move " + tmp.string() + " into place: " + ec.message());
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  try {
    return json::parse(f);
  } catch (const json::parse_error& ex) {
    throw FormatError(path.string() + ": malformed JSON (" + ex.what() + ")");
  }
}

}  // namespace neuroadapt
