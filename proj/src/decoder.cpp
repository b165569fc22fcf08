#include "neuroadapt/decoder.hpp"

#include "neuroadapt/lda.hpp"
#include "neuroadapt/robust_stats.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace neuroadapt {

std::pair<int, int> LabeledDataset::class_counts() const {
  int n1 = 0;
  for (int y : labels) n1 += (y == 1);
  return {static_cast<int>(labels.size()) - n1, n1};
}

PreparedDataset prepare_dataset(std::span<const Epoch> raw_epochs, const PrepOptions& options) {
  for (const auto& e : raw_epochs) validate_epoch(e);

  const std::vector<Epoch> filtered = filter_epochs(raw_epochs, options.exec);
  const std::vector<bool> amp = amplitude_reject(filtered, options.amplitude_threshold_uv);

  std::vector<bool> behavior(filtered.size(), false);
  const bool have_behavior =
      filtered.size() >= 4 &&
      std::all_of(filtered.begin(), filtered.end(), [](const Epoch& e) { return e.placement_error.has_value(); });
  if (have_behavior) {
    std::vector<double> errs;
    errs.reserve(filtered.size());
    for (const auto& e : filtered) errs.push_back(*e.placement_error);
    behavior = tukey_mask(errs, options.tukey_k);
  }

  PreparedDataset out;
  std::vector<Epoch> kept;
  for (std::size_t i = 0; i < filtered.size(); ++i) {
    if (amp[i]) out.rejected_amplitude.push_back(filtered[i].trial_id);
    if (behavior[i]) out.rejected_behavior.push_back(filtered[i].trial_id);
    if (!amp[i] && !behavior[i]) kept.push_back(filtered[i]);
  }

  const bool have_labels =
      !kept.empty() && std::all_of(kept.begin(), kept.end(), [](const Epoch& e) { return e.label.has_value(); });
  if (have_labels) {
    for (const auto& e : kept) {
      if (*e.label != 0 && *e.label != 1) {
        throw std::invalid_argument("trial " + std::to_string(e.trial_id) + ": label must be 0 or 1");
      }
      out.data.labels.push_back(*e.label);
    }
    out.data.split_threshold = std::numeric_limits<double>::quiet_NaN();
  } else {
    std::vector<double> scores;
    for (const auto& e : kept) scores.push_back(e.raw_score);
    auto split = median_split(scores);
    out.data.labels = std::move(split.labels);
    out.data.split_threshold = split.threshold;
  }
  out.data.features = featurize_batch(kept, options.exec);
  for (const auto& e : kept) out.data.trial_ids.push_back(e.trial_id);
  return out;
}

std::array<double, kFeatures> feature_tstats(const LabeledDataset& data, Execution exec) {
  std::vector<std::size_t> rows(data.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return feature_tstats(data, rows, exec);
}

std::array<double, kFeatures> feature_tstats(const LabeledDataset& data, std::span<const std::size_t> rows,
                                             Execution exec) {
  std::vector<FeatureMatrix> sub;
  std::vector<int> labels;
  sub.reserve(rows.size());
  for (std::size_t r : rows) {
    sub.push_back(data.features.at(r));
    labels.push_back(data.labels.at(r));
  }
  const auto n1 = std::count(labels.begin(), labels.end(), 1);
  const auto n0 = static_cast<std::ptrdiff_t>(labels.size()) - n1;
  if (n0 < 2 || n1 < 2) throw std::invalid_argument("feature_tstats: each class needs at least 2 trials");
  return exec == Execution::serial ? kernels::serial::abs_tstats(sub, labels) : kernels::omp::abs_tstats(sub, labels);
}

std::vector<FeatureIndex> rank_features(const std::array<double, kFeatures>& abs_t, std::size_t top_k) {
  std::vector<int> order(kFeatures);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return abs_t[static_cast<std::size_t>(a)] > abs_t[static_cast<std::size_t>(b)];
  });
  order.resize(std::min<std::size_t>(top_k, order.size()));
  std::vector<FeatureIndex> out;
  out.reserve(order.size());
  for (int f : order) out.push_back(FeatureIndex::from_flat(f));
  return out;
}

std::string GridSearchOptions::fingerprint() const {
  std::ostringstream os;
  os << "grid:top" << top_k << ":n" << min_features << "-" << max_features << "/" << step << ":test" << test_fraction
     << ":min" << min_trials_per_class << ":band" << kBandLoHz << "-" << kBandHiHz;
  const std::string s = os.str();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream hex;
  hex << std::hex << h;
  return hex.str();
}

namespace {

Eigen::MatrixXd gather(const LabeledDataset& data, std::span<const std::size_t> rows,
                       std::span<const FeatureIndex> feats) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(feats.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& fm = data.features[rows[i]];
    for (std::size_t j = 0; j < feats.size(); ++j) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = fm[feats[j]];
    }
  }
  return x;
}

struct BinaryCounts {
  int tp{0}, fp{0}, tn{0}, fn{0};

  double accuracy() const { return static_cast<double>(tp + tn) / (tp + fp + tn + fn); }
  double f1() const {
    const int denom = 2 * tp + fp + fn;
    return denom == 0 ? 0.0 : 2.0 * tp / denom;
  }
};

BinaryCounts count(std::span<const int> predicted, std::span<const int> truth) {
  BinaryCounts c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (predicted[i] == 1) {
      (truth[i] == 1 ? c.tp : c.fp)++;
    } else {
      (truth[i] == 1 ? c.fn : c.tn)++;
    }
  }
  return c;
}

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

Split stratified_split(const LabeledDataset& data, Rng& rng, const GridSearchOptions& opt) {
  Split s;
  for (int cls = 0; cls <= 1; ++cls) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data.labels[i] == cls) idx.push_back(i);
    }
    for (std::size_t i = idx.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng.uniform_int(static_cast<int>(i)));
      std::swap(idx[i - 1], idx[j]);
    }
    const auto n_test = static_cast<std::size_t>(
        std::max(1.0, std::round(opt.test_fraction * static_cast<double>(idx.size()))));
    if (idx.size() < n_test + 2) {
      throw std::invalid_argument("grid_search: class " + std::to_string(cls) + " too small to split");
    }
    s.test.insert(s.test.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
    s.train.insert(s.train.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

struct CandidateFit {
  LdaModel model;
  std::vector<double> test_scores;
  CandidateScore score;
  std::vector<int> evaluated_ids;
};

CandidateFit fit_candidate(const LabeledDataset& data, const Split& split, std::span<const FeatureIndex> ranked,
                           int n_features, std::span<const int> train_y, std::span<const int> test_y) {
  const auto feats = ranked.first(static_cast<std::size_t>(n_features));
  CandidateFit c;
  c.model = fit_lda(gather(data, split.train, feats), train_y);

  // Scored on held-out rows only.
  const Eigen::MatrixXd xt = gather(data, split.test, feats);
  std::vector<int> predicted(split.test.size());
  c.test_scores.resize(split.test.size());
  for (std::size_t i = 0; i < split.test.size(); ++i) {
    c.test_scores[i] = c.model.score(xt.row(static_cast<Eigen::Index>(i)).transpose());
    predicted[i] = c.test_scores[i] > 0.0 ? 1 : 0;
    c.evaluated_ids.push_back(data.trial_ids[split.test[i]]);
  }
  const BinaryCounts counts = count(predicted, test_y);
  c.score = {n_features, counts.accuracy(), counts.f1(), c.model.lambda};
  return c;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

GridSearchReport grid_search(const LabeledDataset& data, Rng& rng, const GridSearchOptions& opt) {
  if (data.labels.size() != data.features.size() || data.trial_ids.size() != data.features.size()) {
    throw std::invalid_argument("grid_search: inconsistent dataset");
  }
  const auto [n0, n1] = data.class_counts();
  if (n0 < opt.min_trials_per_class || n1 < opt.min_trials_per_class) {
    throw std::invalid_argument("grid_search: need at least " + std::to_string(opt.min_trials_per_class) +
                                " trials per class, have " + std::to_string(n0) + "/" + std::to_string(n1));
  }
  if (opt.min_features < 1 || opt.step < 1 || opt.max_features < opt.min_features) {
    throw std::invalid_argument("grid_search: bad feature grid");
  }

  const Split split = stratified_split(data, rng, opt);
  const auto ranked = rank_features(feature_tstats(data, split.train, opt.exec), opt.top_k);

  std::vector<int> train_y, test_y;
  for (std::size_t r : split.train) train_y.push_back(data.labels[r]);
  for (std::size_t r : split.test) test_y.push_back(data.labels[r]);

  std::vector<int> grid;
  for (int n = opt.min_features; n <= opt.max_features && n <= static_cast<int>(ranked.size()); n += opt.step) {
    grid.push_back(n);
  }
  if (grid.empty()) throw std::invalid_argument("grid_search: empty feature grid");

  std::vector<CandidateFit> fits(grid.size());
  std::exception_ptr error;
  std::mutex mu;
  const auto n_grid = static_cast<std::ptrdiff_t>(grid.size());
#pragma omp parallel for schedule(dynamic) if (opt.exec == Execution::parallel)
  for (std::ptrdiff_t i = 0; i < n_grid; ++i) {
    try {
      fits[static_cast<std::size_t>(i)] =
          fit_candidate(data, split, ranked, grid[static_cast<std::size_t>(i)], train_y, test_y);
    } catch (...) {
      std::lock_guard lock(mu);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);

  // Ordered reduction: strict improvement only, so ties keep fewer features.
  std::size_t best = 0;
  for (std::size_t i = 1; i < fits.size(); ++i) {
    if (fits[i].score.accuracy > fits[best].score.accuracy) best = i;
  }
  const CandidateFit& win = fits[best];

  GridSearchReport rep;
  for (auto& f : fits) {
    rep.candidates.push_back(f.score);
    rep.evaluated_trial_ids.push_back(f.evaluated_ids);
  }
  for (std::size_t r : split.train) rep.train_trial_ids.push_back(data.trial_ids[r]);
  for (std::size_t r : split.test) rep.test_trial_ids.push_back(data.trial_ids[r]);
  rep.test_raw_scores = win.test_scores;
  rep.test_labels = test_y;

  DecoderBundle& b = rep.bundle;
  b.selected_features.assign(ranked.begin(), ranked.begin() + win.score.n_features);
  b.lda_weights.assign(win.model.weights.data(), win.model.weights.data() + win.model.weights.size());
  b.lda_bias = win.model.bias;
  b.shrinkage_lambda = win.model.lambda;
  b.norm_lo = quantile(win.test_scores, 0.05);
  b.norm_hi = quantile(win.test_scores, 0.95);
  if (!(b.norm_lo < b.norm_hi)) throw std::runtime_error("grid_search: degenerate held-out score distribution");
  b.cv_accuracy = win.score.accuracy;
  b.cv_f1 = win.score.f1;
  b.config_fingerprint = opt.fingerprint();
  b.created_at = utc_timestamp();
  return rep;
}

DecoderBundle grid_search_fit(const LabeledDataset& data, Rng& rng, const GridSearchOptions& options) {
  return grid_search(data, rng, options).bundle;
}

double raw_lda_score(const DecoderBundle& bundle, const FeatureMatrix& features) {
  if (bundle.lda_weights.size() != bundle.selected_features.size()) {
    throw std::invalid_argument("decoder bundle: weight/feature count mismatch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < bundle.lda_weights.size(); ++i) {
    s += bundle.lda_weights[i] * features[bundle.selected_features[i]];
  }
  return s + bundle.lda_bias;
}

double normalize_score(const DecoderBundle& bundle, double raw) {
  const double v = (raw - bundle.norm_lo) / (bundle.norm_hi - bundle.norm_lo);
  return std::clamp(v, 0.0, 1.0);
}

Reward score_epoch(const DecoderBundle& bundle, const Epoch& epoch) {
  const double raw = raw_lda_score(bundle, featurize(filter_epoch(epoch)));
  return Reward::make(normalize_score(bundle, raw), RewardSource::implicit_decoder);
}

MetricsReport compute_metrics(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("compute_metrics: length mismatch");
  const auto n_pos = std::count(labels.begin(), labels.end(), 1);
  const auto n_neg = static_cast<std::ptrdiff_t>(labels.size()) - n_pos;
  if (n_pos == 0 || n_neg == 0) throw std::invalid_argument("compute_metrics: both classes must be present");

  MetricsReport rep;
  std::vector<int> predicted(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) predicted[i] = scores[i] >= 0.5 ? 1 : 0;
  const BinaryCounts c = count(predicted, labels);
  rep.accuracy = c.accuracy();
  rep.f1 = c.f1();

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  rep.roc_points.push_back({0.0, 0.0});
  double tp = 0.0, fp = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    const double thr = scores[order[i]];
    while (i < order.size() && scores[order[i]] == thr) {
      (labels[order[i]] == 1 ? tp : fp) += 1.0;
      ++i;
    }
    rep.roc_points.push_back({fp / static_cast<double>(n_neg), tp / static_cast<double>(n_pos)});
  }
  for (std::size_t i = 1; i < rep.roc_points.size(); ++i) {
    const auto& a = rep.roc_points[i - 1];
    const auto& b = rep.roc_points[i];
    rep.auc += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
  }
  return rep;
}

}  // namespace neuroadapt
