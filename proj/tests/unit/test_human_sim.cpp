#include "neuroadapt/decoder.hpp"
#include "neuroadapt/human_sim.hpp"
#include "neuroadapt/montage.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

using namespace neuroadapt;

namespace {

double normal_cdf(double x, double mean, double sd) { return 0.5 * std::erfc(-(x - mean) / (sd * std::sqrt(2.0))); }

// One-sample Kolmogorov-Smirnov p-value, asymptotic series with the
// Stephens small-sample correction.
double ks_pvalue(std::vector<double> x, double mean, double sd) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = normal_cdf(x[i], mean, sd);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
  double q = 0.0;
  for (int k = 1; k <= 100; ++k) q += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
  return std::clamp(q, 0.0, 1.0);
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i] / n;
    mb += b[i] / n;
  }
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

ErpModel high_snr() {
  ErpModel erp;
  erp.effect_amplitude_uv = 10.0;
  erp.background_noise_sd_uv = 1.0;
  erp.alpha_band_amp_uv = 0.5;
  erp.label_noise = 0.0;
  return erp;
}

}  // namespace

TEST_CASE("graded ratings follow the configured normal") {
  PreferenceProfile p;
  p.mean_score = {0.5, 0.3, 0.2, 0.1};
  p.rating_sd = 0.1;
  Rng rng(2024);
  std::vector<double> r;
  for (int i = 0; i < 2000; ++i) r.push_back(explicit_rating(p, ActionId{0}, 0, rng).reward.value);
  CHECK(ks_pvalue(r, 0.5, 0.1) > 0.01);
  // A shifted reference is rejected, so the check has power.
  CHECK(ks_pvalue(r, 0.52, 0.1) < 0.01);
}

TEST_CASE("response modes, anchoring and clamping") {
  PreferenceProfile p;
  p.response_mode = ResponseMode::binary;
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const double v = explicit_rating(p, ActionId{2}, i, rng).reward.value;
    CHECK((v == 0.0 || v == 1.0));
  }
  p.response_mode = ResponseMode::graded;
  p.anchor_pull = 1.0;
  CHECK(explicit_rating(p, ActionId{2}, 0, rng).reward.value == 0.5);
  p.anchor_pull = 0.0;
  p.rating_sd = 5.0;
  for (int i = 0; i < 200; ++i) {
    const double v = explicit_rating(p, ActionId{1}, 0, rng).reward.value;
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK_THROWS_AS(explicit_rating(p, ActionId{0}, -1, rng), std::invalid_argument);
}

TEST_CASE("rating class follows the split threshold") {
  PreferenceProfile p;
  p.mean_score = {0.2, 0.4, 0.9, 0.6};
  p.rating_sd = 0.0;
  CHECK(p.split_threshold(0) == doctest::Approx(0.5));
  CHECK(p.best().index == 2);
  Rng rng(3);
  CHECK(explicit_rating(p, ActionId{2}, 0, rng).true_class == 1);
  CHECK(explicit_rating(p, ActionId{3}, 0, rng).true_class == 1);
  CHECK(explicit_rating(p, ActionId{1}, 0, rng).true_class == 0);
  p.drift_slope = {0.01, 0.0, 0.0, 0.0};
  CHECK(p.drifted_mean(ActionId{0}, 50) == doctest::Approx(0.7));
  CHECK(p.split_threshold(50) == doctest::Approx(0.65));
}

TEST_CASE("drift produces the expected time-rating correlation") {
  // Conditions cycle through 140 trials. Without clamping,
  // rho = b sd_t / sqrt(b^2 var_t + var_means + sd^2) with population
  // variances over the trial index and the four condition means.
  PreferenceProfile p;
  p.mean_score = {0.55, 0.45, 0.65, 0.60};
  p.rating_sd = 0.1;
  p.drift_slope = {0.002, 0.002, 0.002, 0.002};
  const double n = 140.0, b = 0.002;
  const double var_t = (n * n - 1.0) / 12.0;
  double mm = 0.0, var_m = 0.0;
  for (double m : p.mean_score) mm += m / 4.0;
  for (double m : p.mean_score) var_m += (m - mm) * (m - mm) / 4.0;
  const double expected = b * std::sqrt(var_t) / std::sqrt(b * b * var_t + var_m + p.rating_sd * p.rating_sd);

  Rng rng(77);
  double total = 0.0;
  const int reps = 200;
  for (int r = 0; r < reps; ++r) {
    std::vector<double> t, y;
    for (int i = 0; i < 140; ++i) {
      t.push_back(i);
      y.push_back(explicit_rating(p, ActionId{i % 4}, i, rng).reward.value);
    }
    total += pearson(t, y);
  }
  // Clamping at 1 trims late high ratings slightly.
  CHECK(total / reps == doctest::Approx(expected).epsilon(0.06));

  p.drift_slope = {0, 0, 0, 0};
  total = 0.0;
  for (int r = 0; r < reps; ++r) {
    std::vector<double> t, y;
    for (int i = 0; i < 140; ++i) {
      t.push_back(i);
      y.push_back(explicit_rating(p, ActionId{i % 4}, i, rng).reward.value);
    }
    total += pearson(t, y);
  }
  CHECK(std::abs(total / reps) < 0.03);
}

TEST_CASE("synthetic epochs") {
  ErpModel erp;
  erp.effect_amplitude_uv = 0.0;
  // With no effect, both classes consume the same draws and coincide.
  Rng a(5), b(5);
  CHECK(synth_epoch(erp, 0, a).samples == synth_epoch(erp, 1, b).samples);

  // Planted bump: mean class difference at the peak equals the amplitude on
  // effect channels and zero elsewhere.
  erp.effect_amplitude_uv = 6.0;
  const int peak = static_cast<int>(475.0 * kSampleRate / 1000.0 + 0.5);  // ~476 ms
  const int tp10 = channel_index("TP10"), oz = channel_index("Oz");
  Rng rng(6);
  double d_eff = 0.0, d_off = 0.0;
  const int n = 400;
  for (int i = 0; i < n; ++i) {
    const Epoch e1 = synth_epoch(erp, 1, rng);
    const Epoch e0 = synth_epoch(erp, 0, rng);
    d_eff += (e1.at(tp10, peak) - e0.at(tp10, peak)) / n;
    d_off += (e1.at(oz, peak) - e0.at(oz, peak)) / n;
  }
  const double ms = 1000.0 * peak / kSampleRate;
  const double bump = 0.5 * (1.0 - std::cos(2.0 * M_PI * (ms - 400.0) / 150.0));
  // Monte Carlo SE of the difference: sqrt(2 (10^2 + 5^2/2) / n) ~ 0.75.
  CHECK(d_eff == doctest::Approx(6.0 * bump).epsilon(0.5));
  CHECK(std::abs(d_off) < 3.0 * 0.75);

  // Determinism.
  Rng r1(9), r2(9);
  CHECK(synth_epoch(erp, 1, r1).samples == synth_epoch(erp, 1, r2).samples);

  // Artifacts land on frontal channels only.
  erp.artifact_prob = 1.0;
  erp.background_noise_sd_uv = 0.0;
  erp.alpha_band_amp_uv = 0.0;
  Rng r3(10);
  const Epoch art = synth_epoch(erp, 0, r3);
  double frontal = 0.0, other = 0.0;
  for (int s = 0; s < kSamples; ++s) {
    frontal = std::max(frontal, std::abs(art.at(0, s)));
    other = std::max(other, std::abs(art.at(oz, s)));
  }
  CHECK(frontal > 100.0);
  CHECK(other == 0.0);
}

TEST_CASE("training trials") {
  PreferenceProfile p;
  p.placement_error_sigma = 0.5;
  ErpModel erp = high_snr();
  Rng rng(12);
  std::vector<double> logs;
  for (int i = 0; i < 2000; ++i) {
    const TrainingTrial tr = synth_training_trial(p, erp, ActionId{i % 4}, i, i, rng);
    CHECK(tr.latent_class == (tr.epoch.raw_score > p.split_threshold(i) ? 1 : 0));
    CHECK(tr.epoch.trial_id == i);
    CHECK(tr.epoch.condition.index == i % 4);
    REQUIRE(tr.epoch.placement_error.has_value());
    logs.push_back(std::log(*tr.epoch.placement_error));
  }
  CHECK(ks_pvalue(logs, 0.0, 0.5) > 0.01);

  erp.label_noise = 1.0;
  Rng rng2(13);
  for (int i = 0; i < 50; ++i) {
    const TrainingTrial tr = synth_training_trial(p, erp, ActionId{i % 4}, i, i, rng2);
    CHECK(tr.latent_class != (tr.epoch.raw_score > p.split_threshold(i) ? 1 : 0));
  }
}

TEST_CASE("implicit feedback separates preferred conditions") {
  const ErpModel erp = high_snr();
  Rng rng(40);
  LabeledDataset d;
  for (int i = 0; i < 140; ++i) {
    d.features.push_back(featurize(filter_epoch(synth_epoch(erp, i % 2, rng))));
    d.labels.push_back(i % 2);
    d.trial_ids.push_back(i);
  }
  const DecoderBundle bundle = grid_search_fit(d, rng);

  PreferenceProfile p;
  p.mean_score = {0.2, 0.3, 0.9, 0.7};
  double best = 0.0, worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const OracleOutput hi = implicit_feedback(bundle, erp, p, ActionId{2}, i, rng);
    const OracleOutput lo = implicit_feedback(bundle, erp, p, ActionId{0}, i, rng);
    CHECK(hi.true_class == 1);
    CHECK(lo.true_class == 0);
    CHECK(hi.reward.source == RewardSource::implicit_decoder);
    best += hi.reward.value / 100.0;
    worst += lo.reward.value / 100.0;
  }
  CHECK(best - worst > 0.2);
}

TEST_CASE("profile and model validation") {
  PreferenceProfile p;
  CHECK_NOTHROW(p.validate());
  p.mean_score = {0.5, 0.7, 0.7, 0.1};
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.mean_score = {0.5, 1.2, 0.7, 0.1};
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = {};
  p.rating_sd = -1.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = {};
  p.placement_error_sigma = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);

  ErpModel e;
  CHECK_NOTHROW(e.validate());
  e.effect_start_ms = 50.0;
  CHECK_THROWS_AS(e.validate(), std::invalid_argument);
  e = {};
  e.effect_channels = {64};
  CHECK_THROWS_AS(e.validate(), std::invalid_argument);
  e = {};
  e.label_noise = 1.5;
  CHECK_THROWS_AS(e.validate(), std::invalid_argument);

  CHECK(parse_response_mode("binary") == ResponseMode::binary);
  CHECK(response_mode_name(ResponseMode::graded) == "graded");
  CHECK_THROWS_AS(parse_response_mode("likert"), std::invalid_argument);
}
