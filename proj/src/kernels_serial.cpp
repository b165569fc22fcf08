#include "neuroadapt/kernels.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace neuroadapt {

double welch_t(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("welch_t: each group needs at least 2 values");
  auto moments = [](std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::pair{m, ss / static_cast<double>(v.size() - 1)};
  };
  const auto [ma, va] = moments(a);
  const auto [mb, vb] = moments(b);
  const double se2 = va / static_cast<double>(a.size()) + vb / static_cast<double>(b.size());
  const double diff = ma - mb;
  if (se2 == 0.0) {
    if (diff == 0.0) return 0.0;
    return diff > 0.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
  }
  return diff / std::sqrt(se2);
}

namespace kernels::serial {

std::vector<Epoch> filter_epochs(std::span<const Epoch> epochs) {
  std::vector<Epoch> out;
  out.reserve(epochs.size());
  for (const auto& e : epochs) out.push_back(filter_epoch(e));
  return out;
}

std::vector<FeatureMatrix> featurize_batch(std::span<const Epoch> epochs) {
  std::vector<FeatureMatrix> out;
  out.reserve(epochs.size());
  for (const auto& e : epochs) out.push_back(featurize(e));
  return out;
}

std::array<double, kFeatures> abs_tstats(std::span<const FeatureMatrix> rows, std::span<const int> labels) {
  if (rows.size() != labels.size()) throw std::invalid_argument("abs_tstats: row/label count mismatch");
  std::array<double, kFeatures> out{};
  std::vector<double> g1, g0;
  for (int f = 0; f < kFeatures; ++f) {
    g1.clear();
    g0.clear();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      (labels[i] == 1 ? g1 : g0).push_back(rows[i].values[static_cast<std::size_t>(f)]);
    }
    out[static_cast<std::size_t>(f)] = std::abs(welch_t(g1, g0));
  }
  return out;
}

}  // namespace kernels::serial

std::vector<Epoch> filter_epochs(std::span<const Epoch> epochs, Execution exec) {
  return exec == Execution::serial ? kernels::serial::filter_epochs(epochs) : kernels::omp::filter_epochs(epochs);
}

std::vector<FeatureMatrix> featurize_batch(std::span<const Epoch> epochs, Execution exec) {
  return exec == Execution::serial ? kernels::serial::featurize_batch(epochs) : kernels::omp::featurize_batch(epochs);
}

}  // namespace neuroadapt
