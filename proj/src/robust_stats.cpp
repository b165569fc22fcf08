#include "neuroadapt/robust_stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace neuroadapt {

double quantile(std::span<const double> values, double p) {
  if (values.empty()) throw std::invalid_argument("quantile of empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile: p outside [0, 1]");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double median(std::span<const double> values) { return quantile(values, 0.5); }

MedianSplit median_split(std::span<const double> scores) {
  if (scores.size() < 2) throw std::invalid_argument("median_split: need at least 2 scores");
  const auto [mn, mx] = std::minmax_element(scores.begin(), scores.end());
  if (*mn == *mx) throw std::invalid_argument("median_split: all scores are equal, no split possible");

  MedianSplit out;
  out.threshold = median(scores);
  out.labels.assign(scores.size(), 0);
  std::size_t n0 = 0, n1 = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] < out.threshold) {
      ++n0;
    } else if (scores[i] > out.threshold) {
      out.labels[i] = 1;
      ++n1;
    }
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] != out.threshold) continue;
    if (n1 < n0) {
      out.labels[i] = 1;
      ++n1;
    } else {
      out.labels[i] = 0;
      ++n0;
    }
  }
  return out;
}

std::vector<bool> tukey_mask(std::span<const double> values, double k) {
  if (values.size() < 4) throw std::invalid_argument("tukey_mask: need at least 4 values");
  const double q1 = quantile(values, 0.25);
  const double q3 = quantile(values, 0.75);
  const double iqr = q3 - q1;
  const double lo = q1 - k * iqr;
  const double hi = q3 + k * iqr;
  std::vector<bool> mask(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) mask[i] = values[i] < lo || values[i] > hi;
  return mask;
}

double mean(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean of empty sample");
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

double variance(std::span<const double> values) {
  if (values.size() < 2) throw std::invalid_argument("variance: need at least 2 values");
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return ss / static_cast<double>(values.size() - 1);
}

}  // namespace neuroadapt
