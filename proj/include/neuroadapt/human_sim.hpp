#pragma once

#include "neuroadapt/bandit.hpp"
#include "neuroadapt/decoder.hpp"
#include "neuroadapt/epoch.hpp"
#include "neuroadapt/rng.hpp"

#include <array>
#include <string_view>
#include <vector>

namespace neuroadapt {

enum class ResponseMode { graded, binary };

std::string_view response_mode_name(ResponseMode m);
ResponseMode parse_response_mode(std::string_view s);

// A simulated participant's rating behaviour.
struct PreferenceProfile {
  std::array<double, kNumActions> mean_score{0.5, 0.4, 0.7, 0.6};
  double rating_sd{0.15};
  std::array<double, kNumActions> drift_slope{0.0, 0.0, 0.0, 0.0};  // score change per trial
  double anchor_pull{0.0};                                            // pull toward 0.5, in [0, 1]
  ResponseMode response_mode{ResponseMode::graded};
  double placement_error_sigma{1.0};  // log-sd of the lognormal placement error (cm)

  void validate() const;

  ActionId best() const;
  double drifted_mean(ActionId c, int t) const;
  // Median of the four drifted condition means at trial t.
  double split_threshold(int t) const;
};

// Synthetic ERP generator: white background noise, a 10 Hz oscillation with
// random per-channel phase and, for class 1 trials, a raised-cosine bump on
// the effect channels over the effect window. Optional blink-like artifacts
// on frontal channels exercise amplitude rejection.
struct ErpModel {
  std::vector<int> effect_channels = default_effect_channels();
  double effect_start_ms{400.0};
  double effect_end_ms{550.0};
  double effect_amplitude_uv{4.0};
  double background_noise_sd_uv{10.0};
  double alpha_band_amp_uv{5.0};
  double label_noise{0.1};  // probability the latent class flips
  double artifact_prob{0.0};
  double artifact_amplitude_uv{200.0};

  void validate() const;

  // TP10, T8, FT8, F6, CP5.
  static std::vector<int> default_effect_channels();
};

struct OracleOutput {
  Reward reward;
  int true_class{0};
  int trial_index{0};
};

// mean + drift * t + N(0, sd) -> (binary: round at 0.5) -> pulled toward
// 0.5 by anchor_pull -> clamped to [0, 1]. true_class is 1 iff the rating
// exceeds the profile's split threshold at t.
OracleOutput explicit_rating(const PreferenceProfile& profile, ActionId condition, int t, Rng& rng);

Epoch synth_epoch(const ErpModel& model, int true_class, Rng& rng);

// Latent class: 1 iff the condition's drifted mean exceeds the profile's
// split threshold, flipped with probability label_noise. The synthetic
// epoch for that class is scored through the decoder.
OracleOutput implicit_feedback(const DecoderBundle& bundle, const ErpModel& model, const PreferenceProfile& profile,
                               ActionId condition, int t, Rng& rng);

// One labelled training trial: explicit rating, EEG class derived from that
// rating (rating above the profile's split threshold, flipped with
// label_noise), synthetic epoch, lognormal placement error.
struct TrainingTrial {
  Epoch epoch;  // raw_score and placement_error populated
  int latent_class{0};
};
TrainingTrial synth_training_trial(const PreferenceProfile& profile, const ErpModel& model, ActionId condition, int t,
                                   int trial_id, Rng& rng);

}  // namespace neuroadapt
