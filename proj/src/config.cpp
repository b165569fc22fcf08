#include "neuroadapt/config.hpp"

#include "neuroadapt/montage.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace neuroadapt {

using nlohmann::json;

std::string_view block_order_name(BlockOrder o) {
  switch (o) {
    case BlockOrder::explicit_first: return "explicit-first";
    case BlockOrder::implicit_first: return "implicit-first";
    case BlockOrder::counterbalanced: return "counterbalanced";
  }
  return "counterbalanced";
}

BlockOrder parse_block_order(std::string_view s) {
  if (s == "explicit-first") return BlockOrder::explicit_first;
  if (s == "implicit-first") return BlockOrder::implicit_first;
  if (s == "counterbalanced") return BlockOrder::counterbalanced;
  throw ConfigError("block_order", "expected explicit-first, implicit-first or counterbalanced");
}

namespace {

// Reads fields out of one JSON object, remembering which keys were
// consumed so that leftovers can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string key(std::string_view k) const { return path_.empty() ? std::string(k) : path_ + "." + std::string(k); }

  bool has(const char* k) {
    seen_.insert(k);
    return j_.contains(k);
  }

  template <class T>
  void read(const char* k, T& out) {
    if (!has(k)) return;
    try {
      out = j_.at(k).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(key(k), std::string("wrong type (") + e.what() + ")");
    }
  }

  template <class T>
  void read_array4(const char* k, std::array<T, 4>& out) {
    if (!has(k)) return;
    const json& v = j_.at(k);
    if (!v.is_array() || v.size() != 4) throw ConfigError(key(k), "expected an array of 4 numbers");
    for (std::size_t i = 0; i < 4; ++i) {
      if (!v[i].is_number()) throw ConfigError(key(k), "expected numbers");
      out[i] = v[i].get<T>();
    }
  }

  const json& at(const char* k) const { return j_.at(k); }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(key(it.key()), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class F>
void wrap_invalid(const std::string& fallback_key, F&& f) {
  try {
    f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    // Validation messages start with the dotted key ("agent.c: ...").
    std::string msg = e.what();
    const auto colon = msg.find(':');
    if (colon != std::string::npos && msg.find(' ') > colon) {
      throw ConfigError(msg.substr(0, colon), msg.substr(colon + 2));
    }
    throw ConfigError(fallback_key, msg);
  }
}

AgentConfig read_agent(const json& j) {
  AgentConfig a;
  Section s(j, "agent");
  s.read("num_actions", a.num_actions);
  s.read("c", a.c);
  s.read("alpha0", a.alpha0);
  s.read("alpha_min", a.alpha_min);
  s.read("epsilon0", a.epsilon0);
  s.read("epsilon_min", a.epsilon_min);
  s.read("gamma", a.gamma);
  s.read("q_init", a.q_init);
  s.read("convergence_k", a.convergence_k);
  s.read("max_trials", a.max_trials);
  if (s.has("decay")) {
    std::string d;
    s.read("decay", d);
    wrap_invalid("agent.decay", [&] { a.decay = parse_decay_mode(d); });
  }
  s.finish();
  return a;
}

PreferenceProfile read_profile(const json& j) {
  PreferenceProfile p;
  Section s(j, "profile");
  s.read_array4("mean_score", p.mean_score);
  s.read("rating_sd", p.rating_sd);
  s.read_array4("drift_slope", p.drift_slope);
  s.read("anchor_pull", p.anchor_pull);
  if (s.has("response_mode")) {
    std::string m;
    s.read("response_mode", m);
    wrap_invalid("profile.response_mode", [&] { p.response_mode = parse_response_mode(m); });
  }
  s.read("placement_error_sigma", p.placement_error_sigma);
  s.finish();
  return p;
}

ErpModel read_erp(const json& j) {
  ErpModel m;
  Section s(j, "erp");
  if (s.has("effect_channels")) {
    const json& v = s.at("effect_channels");
    if (!v.is_array()) throw ConfigError("erp.effect_channels", "expected an array of channel labels");
    m.effect_channels.clear();
    for (const auto& e : v) {
      if (!e.is_string()) throw ConfigError("erp.effect_channels", "expected channel labels");
      wrap_invalid("erp.effect_channels", [&] { m.effect_channels.push_back(channel_index(e.get<std::string>())); });
    }
  }
  if (s.has("effect_window_ms")) {
    const json& v = s.at("effect_window_ms");
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      throw ConfigError("erp.effect_window_ms", "expected [start_ms, end_ms]");
    }
    m.effect_start_ms = v[0].get<double>();
    m.effect_end_ms = v[1].get<double>();
  }
  s.read("effect_amplitude_uv", m.effect_amplitude_uv);
  s.read("background_noise_sd_uv", m.background_noise_sd_uv);
  s.read("alpha_band_amp_uv", m.alpha_band_amp_uv);
  s.read("label_noise", m.label_noise);
  s.read("artifact_prob", m.artifact_prob);
  s.read("artifact_amplitude_uv", m.artifact_amplitude_uv);
  s.finish();
  return m;
}

GridSearchOptions read_decoder(const json& j) {
  GridSearchOptions g;
  Section s(j, "decoder");
  s.read("top_k", g.top_k);
  s.read("min_features", g.min_features);
  s.read("max_features", g.max_features);
  s.read("step", g.step);
  s.read("test_fraction", g.test_fraction);
  s.read("min_trials_per_class", g.min_trials_per_class);
  s.finish();
  return g;
}

LiveOptions read_live(const json& j) {
  LiveOptions l;
  Section s(j, "live");
  s.read("rating_timeout_ms", l.rating_timeout_ms);
  if (s.has("truth") && !s.at("truth").is_null()) {
    const json& v = s.at("truth");
    if (v.is_number_integer()) {
      l.truth = ActionId{v.get<int>()};
      if (!is_valid(*l.truth)) throw ConfigError("live.truth", "condition index out of range");
    } else if (v.is_string()) {
      wrap_invalid("live.truth", [&] { l.truth = parse_condition(v.get<std::string>()); });
    } else {
      throw ConfigError("live.truth", "expected a condition index or name");
    }
  }
  s.read("static_dir", l.static_dir);
  s.finish();
  return l;
}

}  // namespace

void ExperimentConfig::validate() const {
  wrap_invalid("agent", [&] { agent.validate(); });
  wrap_invalid("profile", [&] { profile.validate(); });
  wrap_invalid("erp", [&] { erp.validate(); });
  if (trials_per_condition < 1) throw ConfigError("trials_per_condition", "must be >= 1");
  if (training_trials != kNumActions * trials_per_condition) {
    throw ConfigError("training_trials", "must equal 4 x trials_per_condition");
  }
  if (!(amplitude_threshold_uv > 0.0)) throw ConfigError("amplitude_threshold_uv", "must be > 0");
  if (!(tukey_k >= 0.0)) throw ConfigError("tukey_k", "must be >= 0");
  if (trial_duration_ms < 0) throw ConfigError("trial_duration_ms", "must be >= 0");
  if (decoder.min_features < 1 || decoder.step < 1 || decoder.max_features < decoder.min_features) {
    throw ConfigError("decoder", "need 1 <= min_features <= max_features and step >= 1");
  }
  if (!(decoder.test_fraction > 0.0 && decoder.test_fraction < 1.0)) {
    throw ConfigError("decoder.test_fraction", "must be in (0, 1)");
  }
  if (live.rating_timeout_ms <= 0) throw ConfigError("live.rating_timeout_ms", "must be > 0");
}

ExperimentConfig config_from_json(const json& j_in) {
  json j = j_in;
  if (j.is_object() && j.contains("extends")) {
    if (!j["extends"].is_string()) throw ConfigError("extends", "expected a preset name");
    json base = config_to_json(load_preset(j["extends"].get<std::string>()));
    j.erase("extends");
    base.merge_patch(j);
    j = std::move(base);
  }

  ExperimentConfig c;
  Section s(j, "");
  int version = kConfigSchemaVersion;
  s.read("schema_version", version);
  if (version != kConfigSchemaVersion) {
    throw ConfigError("schema_version", "unsupported version " + std::to_string(version));
  }
  if (s.has("agent")) c.agent = read_agent(s.at("agent"));
  if (s.has("profile")) c.profile = read_profile(s.at("profile"));
  if (s.has("erp")) c.erp = read_erp(s.at("erp"));
  if (s.has("decoder")) c.decoder = read_decoder(s.at("decoder"));
  if (s.has("live")) c.live = read_live(s.at("live"));
  s.read("training_trials", c.training_trials);
  s.read("trials_per_condition", c.trials_per_condition);
  if (s.has("block_order")) {
    std::string o;
    s.read("block_order", o);
    c.block_order = parse_block_order(o);
  }
  s.read("seed", c.seed);
  s.read("amplitude_threshold_uv", c.amplitude_threshold_uv);
  s.read("tukey_k", c.tukey_k);
  s.read("trial_duration_ms", c.trial_duration_ms);
  s.finish();
  c.validate();
  return c;
}

json agent_config_to_json(const AgentConfig& a) {
  return json{{"num_actions", a.num_actions}, {"c", a.c},
              {"alpha0", a.alpha0},           {"alpha_min", a.alpha_min},
              {"epsilon0", a.epsilon0},       {"epsilon_min", a.epsilon_min},
              {"gamma", a.gamma},             {"q_init", a.q_init},
              {"convergence_k", a.convergence_k}, {"max_trials", a.max_trials},
              {"decay", std::string(decay_mode_name(a.decay))}};
}

AgentConfig agent_config_from_json(const json& j) {
  AgentConfig a = read_agent(j);
  wrap_invalid("agent", [&] { a.validate(); });
  return a;
}

json config_to_json(const ExperimentConfig& c) {
  json channels = json::array();
  for (int ch : c.erp.effect_channels) channels.push_back(std::string(montage_64()[static_cast<std::size_t>(ch)]));
  json live{{"rating_timeout_ms", c.live.rating_timeout_ms}, {"static_dir", c.live.static_dir}};
  live["truth"] = c.live.truth ? json(c.live.truth->index) : json(nullptr);
  return json{
      {"schema_version", kConfigSchemaVersion},
      {"seed", c.seed},
      {"training_trials", c.training_trials},
      {"trials_per_condition", c.trials_per_condition},
      {"block_order", std::string(block_order_name(c.block_order))},
      {"amplitude_threshold_uv", c.amplitude_threshold_uv},
      {"tukey_k", c.tukey_k},
      {"trial_duration_ms", c.trial_duration_ms},
      {"agent", agent_config_to_json(c.agent)},
      {"profile",
       {{"mean_score", c.profile.mean_score},
        {"rating_sd", c.profile.rating_sd},
        {"drift_slope", c.profile.drift_slope},
        {"anchor_pull", c.profile.anchor_pull},
        {"response_mode", std::string(response_mode_name(c.profile.response_mode))},
        {"placement_error_sigma", c.profile.placement_error_sigma}}},
      {"erp",
       {{"effect_channels", channels},
        {"effect_window_ms", {c.erp.effect_start_ms, c.erp.effect_end_ms}},
        {"effect_amplitude_uv", c.erp.effect_amplitude_uv},
        {"background_noise_sd_uv", c.erp.background_noise_sd_uv},
        {"alpha_band_amp_uv", c.erp.alpha_band_amp_uv},
        {"label_noise", c.erp.label_noise},
        {"artifact_prob", c.erp.artifact_prob},
        {"artifact_amplitude_uv", c.erp.artifact_amplitude_uv}}},
      {"decoder",
       {{"top_k", c.decoder.top_k},
        {"min_features", c.decoder.min_features},
        {"max_features", c.decoder.max_features},
        {"step", c.decoder.step},
        {"test_fraction", c.decoder.test_fraction},
        {"min_trials_per_class", c.decoder.min_trials_per_class}}},
      {"live", live}};
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("<file>", std::string("malformed JSON: ") + e.what());
  }
  return config_from_json(j);
}

std::filesystem::path preset_dir() {
  if (const char* env = std::getenv("NEUROADAPT_PRESET_DIR")) return env;
  return std::filesystem::path(NEUROADAPT_DATA_DIR) / "presets";
}

ExperimentConfig load_preset(std::string_view name) {
  const auto path = preset_dir() / (std::string(name) + ".json");
  if (!std::filesystem::exists(path)) throw ConfigError("extends", "unknown preset '" + std::string(name) + "'");
  return load_config(path);
}

std::string config_fingerprint(const ExperimentConfig& c) {
  const std::string s = config_to_json(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

}  // namespace neuroadapt
