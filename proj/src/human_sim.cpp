#include "neuroadapt/human_sim.hpp"

#include "neuroadapt/montage.hpp"
#include "neuroadapt/robust_stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace neuroadapt {

std::string_view response_mode_name(ResponseMode m) { return m == ResponseMode::graded ? "graded" : "binary"; }

ResponseMode parse_response_mode(std::string_view s) {
  if (s == "graded") return ResponseMode::graded;
  if (s == "binary") return ResponseMode::binary;
  throw std::invalid_argument("profile.response_mode: expected 'graded' or 'binary', got '" + std::string(s) + "'");
}

void PreferenceProfile::validate() const {
  for (double m : mean_score) {
    if (!(m >= 0.0 && m <= 1.0)) throw std::invalid_argument("profile.mean_score: entries must be in [0, 1]");
  }
  const auto top = *std::max_element(mean_score.begin(), mean_score.end());
  if (std::count(mean_score.begin(), mean_score.end(), top) != 1) {
    throw std::invalid_argument("profile.mean_score: the best condition must be unique");
  }
  if (!(rating_sd >= 0.0) || !std::isfinite(rating_sd)) throw std::invalid_argument("profile.rating_sd: must be >= 0");
  for (double d : drift_slope) {
    if (!std::isfinite(d)) throw std::invalid_argument("profile.drift_slope: must be finite");
  }
  if (!(anchor_pull >= 0.0 && anchor_pull <= 1.0)) throw std::invalid_argument("profile.anchor_pull: must be in [0, 1]");
  if (!(placement_error_sigma > 0.0)) throw std::invalid_argument("profile.placement_error_sigma: must be > 0");
}

ActionId PreferenceProfile::best() const {
  return ActionId{static_cast<int>(std::max_element(mean_score.begin(), mean_score.end()) - mean_score.begin())};
}

double PreferenceProfile::drifted_mean(ActionId c, int t) const {
  const auto i = static_cast<std::size_t>(c.index);
  return mean_score[i] + drift_slope[i] * t;
}

double PreferenceProfile::split_threshold(int t) const {
  std::array<double, kNumActions> m{};
  for (int c = 0; c < kNumActions; ++c) m[static_cast<std::size_t>(c)] = drifted_mean(ActionId{c}, t);
  return median(m);
}

void ErpModel::validate() const {
  if (effect_channels.empty()) throw std::invalid_argument("erp.effect_channels: must not be empty");
  for (int ch : effect_channels) {
    if (ch < 0 || ch >= kChannels) throw std::invalid_argument("erp.effect_channels: index out of range");
  }
  if (!(effect_start_ms >= 100.0 && effect_start_ms < effect_end_ms && effect_end_ms <= 600.0)) {
    throw std::invalid_argument("erp.effect_window_ms: must lie within 100-600 ms");
  }
  if (!std::isfinite(effect_amplitude_uv)) throw std::invalid_argument("erp.effect_amplitude_uv: must be finite");
  if (!(background_noise_sd_uv >= 0.0)) throw std::invalid_argument("erp.background_noise_sd_uv: must be >= 0");
  if (!(alpha_band_amp_uv >= 0.0)) throw std::invalid_argument("erp.alpha_band_amp_uv: must be >= 0");
  if (!(label_noise >= 0.0 && label_noise <= 1.0)) throw std::invalid_argument("erp.label_noise: must be in [0, 1]");
  if (!(artifact_prob >= 0.0 && artifact_prob <= 1.0)) throw std::invalid_argument("erp.artifact_prob: must be in [0, 1]");
  if (!std::isfinite(artifact_amplitude_uv)) throw std::invalid_argument("erp.artifact_amplitude_uv: must be finite");
}

std::vector<int> ErpModel::default_effect_channels() {
  return {channel_index("TP10"), channel_index("T8"), channel_index("FT8"), channel_index("F6"), channel_index("CP5")};
}

OracleOutput explicit_rating(const PreferenceProfile& profile, ActionId condition, int t, Rng& rng) {
  if (t < 0) throw std::invalid_argument("explicit_rating: t must be >= 0");
  double v = profile.drifted_mean(condition, t) + profile.rating_sd * rng.normal();
  if (profile.response_mode == ResponseMode::binary) v = v >= 0.5 ? 1.0 : 0.0;
  v += profile.anchor_pull * (0.5 - v);
  const Reward r = Reward::make(v, RewardSource::explicit_rating);
  return {r, r.value > profile.split_threshold(t) ? 1 : 0, t};
}

Epoch synth_epoch(const ErpModel& model, int true_class, Rng& rng) {
  Epoch e;
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (int ch = 0; ch < kChannels; ++ch) {
    const double phase = two_pi * rng.uniform();
    for (int s = 0; s < kSamples; ++s) {
      const double t_sec = s / kSampleRate;
      e.at(ch, s) = model.background_noise_sd_uv * rng.normal() +
                    model.alpha_band_amp_uv * std::sin(two_pi * 10.0 * t_sec + phase);
    }
  }

  if (true_class == 1 && model.effect_amplitude_uv != 0.0) {
    const double width = model.effect_end_ms - model.effect_start_ms;
    for (int s = 0; s < kSamples; ++s) {
      const double ms = 1000.0 * s / kSampleRate;
      if (ms < model.effect_start_ms || ms > model.effect_end_ms) continue;
      const double bump = 0.5 * (1.0 - std::cos(two_pi * (ms - model.effect_start_ms) / width));
      for (int ch : model.effect_channels) e.at(ch, s) += model.effect_amplitude_uv * bump;
    }
  }

  // Blink-like transient on frontal channels; draws are consumed either way.
  const double u_hit = rng.uniform();
  const double u_time = rng.uniform();
  const double u_amp = rng.uniform();
  if (u_hit < model.artifact_prob) {
    static const std::array<int, 6> frontal = {0, 1, 32, 33, 34, 35};  // Fp1 Fp2 AF7 AF3 AF4 AF8
    const double center = 1000.0 * u_time;
    const double amp = model.artifact_amplitude_uv * (0.75 + 0.5 * u_amp);
    for (int s = 0; s < kSamples; ++s) {
      const double z = (1000.0 * s / kSampleRate - center) / 60.0;
      const double g = amp * std::exp(-0.5 * z * z);
      for (int ch : frontal) e.at(ch, s) += g;
    }
  }
  return e;
}

OracleOutput implicit_feedback(const DecoderBundle& bundle, const ErpModel& model, const PreferenceProfile& profile,
                               ActionId condition, int t, Rng& rng) {
  int cls = profile.drifted_mean(condition, t) > profile.split_threshold(t) ? 1 : 0;
  if (rng.uniform() < model.label_noise) cls = 1 - cls;
  Epoch e = synth_epoch(model, cls, rng);
  e.condition = condition;
  e.trial_id = t;
  return {score_epoch(bundle, e), cls, t};
}

TrainingTrial synth_training_trial(const PreferenceProfile& profile, const ErpModel& model, ActionId condition, int t,
                                   int trial_id, Rng& rng) {
  const OracleOutput rating = explicit_rating(profile, condition, t, rng);
  int cls = rating.true_class;
  if (rng.uniform() < model.label_noise) cls = 1 - cls;
  TrainingTrial out{synth_epoch(model, cls, rng), cls};
  out.epoch.trial_id = trial_id;
  out.epoch.condition = condition;
  out.epoch.raw_score = rating.reward.value;
  out.epoch.placement_error = std::exp(profile.placement_error_sigma * rng.normal());
  return out;
}

}  // namespace neuroadapt
