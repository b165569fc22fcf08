#include "neuroadapt/decoder.hpp"
#include "neuroadapt/human_sim.hpp"
#include "neuroadapt/montage.hpp"
#include "neuroadapt/robust_stats.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

using namespace neuroadapt;

namespace {

LabeledDataset noise_dataset(int n, std::uint64_t seed) {
  Rng rng(seed);
  LabeledDataset d;
  for (int i = 0; i < n; ++i) {
    FeatureMatrix f;
    for (auto& v : f.values) v = rng.normal();
    d.features.push_back(f);
    d.labels.push_back(i % 2);
    d.trial_ids.push_back(i);
  }
  return d;
}

double welch_oracle(const LabeledDataset& d, int feature) {
  double s[2] = {0, 0}, ss[2] = {0, 0};
  int n[2] = {0, 0};
  for (std::size_t i = 0; i < d.size(); ++i) {
    const int c = d.labels[i];
    const double v = d.features[i].values[static_cast<std::size_t>(feature)];
    s[c] += v;
    ss[c] += v * v;
    ++n[c];
  }
  double m[2], var[2];
  for (int c = 0; c < 2; ++c) {
    m[c] = s[c] / n[c];
    var[c] = (ss[c] - n[c] * m[c] * m[c]) / (n[c] - 1);
  }
  return std::abs(m[1] - m[0]) / std::sqrt(var[1] / n[1] + var[0] / n[0]);
}

std::vector<Epoch> erp_epochs(const ErpModel& erp, int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Epoch> out;
  for (int i = 0; i < n; ++i) {
    Epoch e = synth_epoch(erp, i % 2, rng);
    e.trial_id = i;
    e.label = i % 2;
    out.push_back(std::move(e));
  }
  return out;
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

TEST_CASE("feature t-statistics") {
  LabeledDataset d = noise_dataset(70, 3);
  Rng rng(4);
  for (std::size_t i = 0; i < d.size(); ++i) d.features[i].values[123] = (d.labels[i] ? 1.0 : -1.0) + rng.normal(0, 0.1);
  const auto t = feature_tstats(d, Execution::serial);
  CHECK(t[123] > 50.0);
  for (int f : {0, 123, 500, 639}) CHECK(t[static_cast<std::size_t>(f)] == doctest::Approx(welch_oracle(d, f)).epsilon(1e-10));
  const auto ranked = rank_features(t, 5);
  REQUIRE(ranked.size() == 5);
  CHECK(ranked[0].flat() == 123);
  for (std::size_t i = 1; i < ranked.size(); ++i) CHECK(t[static_cast<std::size_t>(ranked[i - 1].flat())] >= t[static_cast<std::size_t>(ranked[i].flat())]);

  std::array<double, kFeatures> flat{};
  const auto tie = rank_features(flat, 3);
  CHECK(tie[0].flat() == 0);
  CHECK(tie[2].flat() == 2);

  const std::vector<std::size_t> rows{0, 1, 2};
  CHECK_THROWS_AS(feature_tstats(d, rows), std::invalid_argument);
}

TEST_CASE("prepare_dataset rejects and labels") {
  ErpModel erp = high_snr();
  auto epochs = erp_epochs(erp, 40, 9);
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    epochs[i].label.reset();
    epochs[i].raw_score = static_cast<double>(i) / 40.0;
    epochs[i].placement_error = 1.0 + 0.01 * static_cast<double>(i % 5);
  }
  // A 300 uV transient survives the band-pass above 100 uV.
  for (int s = 100; s < 140; ++s) epochs[3].at(0, s) += 300.0;
  epochs[7].placement_error = 50.0;

  const PreparedDataset p = prepare_dataset(epochs, {.exec = Execution::serial});
  CHECK(p.rejected_amplitude == std::vector<int>{3});
  CHECK(p.rejected_behavior == std::vector<int>{7});
  REQUIRE(p.data.size() == 38);
  const auto [n0, n1] = p.data.class_counts();
  CHECK(n0 == 19);
  CHECK(n1 == 19);
  std::vector<double> kept_scores;
  for (int id : p.data.trial_ids) kept_scores.push_back(static_cast<double>(id) / 40.0);
  CHECK(p.data.split_threshold == doctest::Approx(median(kept_scores)));
  for (std::size_t i = 0; i < p.data.size(); ++i) {
    CHECK(p.data.labels[i] == (kept_scores[i] > p.data.split_threshold ? 1 : 0));
  }

  // Explicit labels win when every epoch has one.
  auto labelled = erp_epochs(erp, 10, 2);
  const PreparedDataset q = prepare_dataset(labelled, {.exec = Execution::serial});
  for (std::size_t i = 0; i < q.data.size(); ++i) CHECK(q.data.labels[i] == q.data.trial_ids[i] % 2);
  CHECK(std::isnan(q.data.split_threshold));
}

TEST_CASE("planted effect is recovered on a high-SNR dataset") {
  const auto epochs = erp_epochs(high_snr(), 140, 21);
  const PreparedDataset p = prepare_dataset(epochs, {.exec = Execution::serial});
  Rng rng(5);
  const GridSearchReport rep = grid_search(p.data, rng, {.exec = Execution::serial});
  CHECK(rep.bundle.cv_accuracy >= 0.95);

  const auto channels = ErpModel::default_effect_channels();
  const std::set<int> effect(channels.begin(), channels.end());
  const FeatureIndex top = rep.bundle.selected_features.front();
  CHECK(effect.count(top.channel) == 1);
  CHECK(top.window >= feature_window_at_ms(400));
  CHECK(top.window <= feature_window_at_ms(500));
}

TEST_CASE("grid search never scores on training rows") {
  LabeledDataset d = noise_dataset(100, 12);
  Rng rng(77);
  const GridSearchReport rep = grid_search(d, rng);
  const std::set<int> train(rep.train_trial_ids.begin(), rep.train_trial_ids.end());
  CHECK(rep.train_trial_ids.size() + rep.test_trial_ids.size() == 100);
  CHECK(rep.test_trial_ids.size() == 20);
  REQUIRE(rep.evaluated_trial_ids.size() == rep.candidates.size());
  for (const auto& ids : rep.evaluated_trial_ids) {
    CHECK(ids == rep.test_trial_ids);
    for (int id : ids) CHECK(train.count(id) == 0);
  }

  // Watermark the held-out rows with a perfect feature: ranking uses the
  // training rows only, so the selection must not move.
  LabeledDataset marked = d;
  for (int id : rep.test_trial_ids) {
    marked.features[static_cast<std::size_t>(id)].values[42] = marked.labels[static_cast<std::size_t>(id)] ? 1e3 : -1e3;
  }
  Rng rng2(77);
  const GridSearchReport rep2 = grid_search(marked, rng2);
  CHECK(rep2.test_trial_ids == rep.test_trial_ids);
  for (std::size_t i = 0; i < rep2.bundle.selected_features.size(); ++i) {
    if (i < rep.bundle.selected_features.size()) CHECK(rep2.bundle.selected_features[i] == rep.bundle.selected_features[i]);
  }
}

TEST_CASE("grid search picks the best candidate, ties to fewer features") {
  LabeledDataset d = noise_dataset(120, 8);
  Rng rng(1);
  const GridSearchReport rep = grid_search(d, rng);
  REQUIRE(rep.candidates.size() == 19);
  CHECK(rep.candidates.front().n_features == 10);
  CHECK(rep.candidates.back().n_features == 100);
  double best = -1.0;
  int best_n = 0;
  for (const auto& c : rep.candidates) {
    if (c.accuracy > best) {
      best = c.accuracy;
      best_n = c.n_features;
    }
  }
  CHECK(static_cast<int>(rep.bundle.selected_features.size()) == best_n);
  CHECK(rep.bundle.cv_accuracy == best);
  CHECK(rep.bundle.norm_lo == quantile(rep.test_raw_scores, 0.05));
  CHECK(rep.bundle.norm_hi == quantile(rep.test_raw_scores, 0.95));
}

TEST_CASE("chance-level accuracy on permuted labels") {
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    LabeledDataset d = noise_dataset(140, 100 + seed);
    Rng perm(seed);
    for (std::size_t i = d.size(); i > 1; --i) std::swap(d.labels[i - 1], d.labels[static_cast<std::size_t>(perm.uniform_int(static_cast<int>(i)))]);
    Rng rng(seed);
    total += grid_search_fit(d, rng).cv_accuracy;
  }
  const double mean_acc = total / 20.0;
  CHECK(mean_acc >= 0.35);
  CHECK(mean_acc <= 0.65);
}

TEST_CASE("grid search preconditions") {
  LabeledDataset d = noise_dataset(30, 1);
  Rng rng(1);
  CHECK_THROWS_AS(grid_search(d, rng), std::invalid_argument);
  LabeledDataset bad = noise_dataset(60, 1);
  bad.trial_ids.pop_back();
  CHECK_THROWS_AS(grid_search(bad, rng), std::invalid_argument);
}

TEST_CASE("score normalization") {
  DecoderBundle b;
  b.norm_lo = -2.0;
  b.norm_hi = 2.0;
  CHECK(normalize_score(b, 0.0) == 0.5);
  CHECK(normalize_score(b, 1.0) == 0.75);
  CHECK(normalize_score(b, -5.0) == 0.0);
  CHECK(normalize_score(b, 5.0) == 1.0);

  const auto epochs = erp_epochs(high_snr(), 100, 4);
  const PreparedDataset p = prepare_dataset(epochs, {.exec = Execution::serial});
  Rng rng(2);
  const DecoderBundle fit = grid_search_fit(p.data, rng);
  // score_epoch is filter -> featurize -> LDA -> normalize.
  const Reward r = score_epoch(fit, epochs[5]);
  CHECK(r.value == normalize_score(fit, raw_lda_score(fit, featurize(filter_epoch(epochs[5])))));

  // Fresh high-SNR epochs land on the right side of 0.5 most of the time.
  Rng sim(99);
  int hits = 0;
  for (int i = 0; i < 200; ++i) {
    const int cls = i % 2;
    hits += (score_epoch(fit, synth_epoch(high_snr(), cls, sim)).value >= 0.5) == (cls == 1);
  }
  CHECK(hits >= 180);

  DecoderBundle broken = fit;
  broken.lda_weights.pop_back();
  CHECK_THROWS_AS(raw_lda_score(broken, FeatureMatrix{}), std::invalid_argument);
}

TEST_CASE("metrics at threshold 0.5 and ROC AUC") {
  const std::vector<double> scores{0.1, 0.4, 0.35, 0.8};
  const std::vector<int> labels{0, 0, 1, 1};
  const MetricsReport m = compute_metrics(scores, labels);
  CHECK(m.auc == doctest::Approx(0.75));
  CHECK(m.accuracy == doctest::Approx(0.75));
  CHECK(m.f1 == doctest::Approx(2.0 / 3.0));
  CHECK(m.roc_points.front().fpr == 0.0);
  CHECK(m.roc_points.back().tpr == 1.0);
  // The threshold is inclusive.
  CHECK(compute_metrics(std::vector<double>{0.5, 0.49}, std::vector<int>{1, 0}).accuracy == 1.0);

  // Mann-Whitney with ties counted as one half.
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> s;
    std::vector<int> y;
    for (int i = 0; i < 50; ++i) {
      y.push_back(i % 3 == 0);
      s.push_back(std::round(rng.uniform() * 10.0 + y.back() * 2.0) / 10.0);
    }
    double u = 0.0, np = 0.0, nn = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      (y[i] ? np : nn) += 1.0;
      if (!y[i]) continue;
      for (std::size_t j = 0; j < s.size(); ++j) {
        if (y[j]) continue;
        u += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
      }
    }
    CHECK(compute_metrics(s, y).auc == doctest::Approx(u / (np * nn)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(compute_metrics(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(compute_metrics(std::vector<double>{0.1}, std::vector<int>{1, 0}), std::invalid_argument);
}
