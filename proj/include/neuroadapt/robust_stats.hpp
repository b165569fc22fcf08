#pragma once

#include <span>
#include <vector>

namespace neuroadapt {

// Sample quantile by linear interpolation between order statistics
// (Hyndman-Fan type 7, the numpy/R default): h = (n - 1) p.
double quantile(std::span<const double> values, double p);
double median(std::span<const double> values);

struct MedianSplit {
  std::vector<int> labels;  // 0 = mismatching (below), 1 = matching (above)
  double threshold{0.0};
};

// Values below the median -> 0, above -> 1. Values equal to the median are
// visited in index order and each goes to the currently smaller class
// (class 0 when sizes are equal), so class sizes end within one of each
// other. Throws std::invalid_argument on fewer than 2 values or when all
// values are equal.
MedianSplit median_split(std::span<const double> scores);

// true = outlier: v < Q1 - k IQR or v > Q3 + k IQR, type-7 quartiles.
// Throws std::invalid_argument on fewer than 4 values.
std::vector<bool> tukey_mask(std::span<const double> values, double k = 1.5);

double mean(std::span<const double> values);
// Sample variance (n - 1 denominator).
double variance(std::span<const double> values);

}  // namespace neuroadapt
