#pragma once

#include "neuroadapt/bandit.hpp"
#include "neuroadapt/epoch.hpp"
#include "neuroadapt/kernels.hpp"
#include "neuroadapt/rng.hpp"

#include <array>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace neuroadapt {

// Median-split training data: one feature matrix per retained trial.
struct LabeledDataset {
  std::vector<FeatureMatrix> features;
  std::vector<int> labels;  // 0 mismatching, 1 matching
  std::vector<int> trial_ids;
  double split_threshold{0.0};

  std::size_t size() const { return features.size(); }
  std::pair<int, int> class_counts() const;
};

struct PrepOptions {
  double amplitude_threshold_uv{100.0};
  double tukey_k{1.5};
  Execution exec{Execution::parallel};
};

struct PreparedDataset {
  LabeledDataset data;
  std::vector<int> rejected_amplitude;  // trial ids
  std::vector<int> rejected_behavior;   // trial ids (Tukey on placement_error)
};

// Filter -> amplitude rejection -> Tukey rejection on placement_error (when
// every epoch carries one) -> labels (explicit labels when every retained
// epoch has one, otherwise median split of raw_score) -> featurize.
PreparedDataset prepare_dataset(std::span<const Epoch> raw_epochs, const PrepOptions& options = {});

// |Welch t| per feature between class 1 and class 0, optionally restricted
// to a subset of rows. Throws std::invalid_argument if a class has < 2 rows.
std::array<double, kFeatures> feature_tstats(const LabeledDataset& data, Execution exec = Execution::parallel);
std::array<double, kFeatures> feature_tstats(const LabeledDataset& data, std::span<const std::size_t> rows,
                                             Execution exec = Execution::parallel);

// Feature indices sorted by descending |t| (ties -> lower flat index).
std::vector<FeatureIndex> rank_features(const std::array<double, kFeatures>& abs_t, std::size_t top_k);

struct DecoderBundle {
  std::vector<FeatureIndex> selected_features;
  std::vector<double> lda_weights;
  double lda_bias{0.0};
  double shrinkage_lambda{0.0};
  double norm_lo{0.0};  // 5th percentile of held-out LDA scores
  double norm_hi{1.0};  // 95th percentile
  double cv_accuracy{0.0};
  double cv_f1{0.0};
  std::string config_fingerprint;
  std::string created_at;
};

struct GridSearchOptions {
  std::size_t top_k{100};
  int min_features{10};
  int max_features{100};
  int step{5};
  double test_fraction{0.2};
  int min_trials_per_class{20};
  Execution exec{Execution::parallel};

  std::string fingerprint() const;
};

struct CandidateScore {
  int n_features{0};
  double accuracy{0.0};
  double f1{0.0};
  double lambda{0.0};
};

struct GridSearchReport {
  DecoderBundle bundle;
  std::vector<CandidateScore> candidates;  // ordered by n_features
  std::vector<int> train_trial_ids;
  std::vector<int> test_trial_ids;
  // Trial ids each candidate was scored on, parallel to `candidates`.
  std::vector<std::vector<int>> evaluated_trial_ids;
  std::vector<double> test_raw_scores;  // chosen model on the held-out rows
  std::vector<int> test_labels;
};

// Seeded stratified 80/20 split; features ranked by |t| on the training
// rows only; shrinkage LDA fitted on the top n for n = 10, 15, ..., 100 and
// scored on the held-out rows; highest held-out accuracy wins (ties ->
// fewer features). Normalization anchors are the 5th/95th percentiles of
// the winner's held-out scores.
GridSearchReport grid_search(const LabeledDataset& data, Rng& rng, const GridSearchOptions& options = {});
DecoderBundle grid_search_fit(const LabeledDataset& data, Rng& rng, const GridSearchOptions& options = {});

double raw_lda_score(const DecoderBundle& bundle, const FeatureMatrix& features);

// (raw - lo) / (hi - lo) clamped to [0, 1].
double normalize_score(const DecoderBundle& bundle, double raw);

// filter -> featurize -> LDA score -> normalize.
Reward score_epoch(const DecoderBundle& bundle, const Epoch& epoch);

struct RocPoint {
  double fpr;
  double tpr;
};

struct MetricsReport {
  double accuracy{0.0};
  double f1{0.0};
  std::vector<RocPoint> roc_points;
  double auc{0.0};
};

// Accuracy and F1 at threshold 0.5 (score >= 0.5 -> class 1). ROC from
// every distinct score used as a threshold, from (0,0) to (1,1); AUC by
// trapezoid, which equals the Mann-Whitney statistic with ties as 1/2.
MetricsReport compute_metrics(std::span<const double> scores, std::span<const int> labels);

}  // namespace neuroadapt
