#pragma once

#include "neuroadapt/bandit.hpp"
#include "neuroadapt/decoder.hpp"
#include "neuroadapt/human_sim.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace neuroadapt {

inline constexpr int kConfigSchemaVersion = 1;

enum class BlockOrder { explicit_first, implicit_first, counterbalanced };

std::string_view block_order_name(BlockOrder o);
BlockOrder parse_block_order(std::string_view s);

// Raised for invalid config content; key() is the dotted path of the
// offending entry ("agent.c", "profile.mean_score", ...).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& msg) : std::runtime_error(key + ": " + msg), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct LiveOptions {
  int rating_timeout_ms{120000};
  std::optional<ActionId> truth;  // ground-truth best condition, if known
  std::string static_dir;         // console assets served over HTTP, optional
};

struct ExperimentConfig {
  AgentConfig agent;
  PreferenceProfile profile;
  ErpModel erp;
  int training_trials{140};
  int trials_per_condition{35};
  BlockOrder block_order{BlockOrder::counterbalanced};
  std::uint64_t seed{1};
  double amplitude_threshold_uv{100.0};
  double tukey_k{1.5};
  int trial_duration_ms{8000};  // simulated clock per trial
  GridSearchOptions decoder;
  LiveOptions live;

  // Throws ConfigError.
  void validate() const;
};

// Key schema (all keys optional, defaults as in the structs above):
//
//   schema_version: 1
//   extends: "<preset name>"           merged underneath this document
//   seed, training_trials, trials_per_condition, block_order,
//   amplitude_threshold_uv, tukey_k, trial_duration_ms
//   agent:   { c, alpha0, alpha_min, epsilon0, epsilon_min, gamma, q_init,
//              convergence_k, max_trials, decay, num_actions }
//   profile: { mean_score[4], rating_sd, drift_slope[4], anchor_pull,
//              response_mode, placement_error_sigma }
//   erp:     { effect_channels[labels], effect_window_ms[2],
//              effect_amplitude_uv, background_noise_sd_uv,
//              alpha_band_amp_uv, label_noise, artifact_prob,
//              artifact_amplitude_uv }
//   decoder: { top_k, min_features, max_features, step, test_fraction,
//              min_trials_per_class }
//   live:    { rating_timeout_ms, truth, static_dir }
//
// Unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& c);
ExperimentConfig load_config(const std::filesystem::path& path);

std::filesystem::path preset_dir();
ExperimentConfig load_preset(std::string_view name);

// FNV-1a of the canonical JSON dump.
std::string config_fingerprint(const ExperimentConfig& c);

nlohmann::json agent_config_to_json(const AgentConfig& a);
AgentConfig agent_config_from_json(const nlohmann::json& j);

}  // namespace neuroadapt
