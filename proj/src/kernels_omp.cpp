#include "neuroadapt/kernels.hpp"

#include <omp.h>

#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>

namespace neuroadapt {

void set_parallelism(int threads) {
  if (threads > 0) omp_set_num_threads(threads);
}

namespace kernels::omp {

namespace {

// Exceptions may not escape an OpenMP region; keep the first and rethrow.
class FirstError {
 public:
  template <class F>
  void run(F&& f) {
    try {
      f();
    } catch (...) {
      std::lock_guard lock(mu_);
      if (!error_) error_ = std::current_exception();
    }
  }
  void rethrow() const {
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::mutex mu_;
  std::exception_ptr error_;
};

}  // namespace

std::vector<Epoch> filter_epochs(std::span<const Epoch> epochs) {
  std::vector<Epoch> out(epochs.size());
  FirstError err;
  const auto n = static_cast<std::ptrdiff_t>(epochs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    err.run([&] { out[static_cast<std::size_t>(i)] = filter_epoch(epochs[static_cast<std::size_t>(i)]); });
  }
  err.rethrow();
  return out;
}

std::vector<FeatureMatrix> featurize_batch(std::span<const Epoch> epochs) {
  std::vector<FeatureMatrix> out(epochs.size());
  FirstError err;
  const auto n = static_cast<std::ptrdiff_t>(epochs.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    err.run([&] { out[static_cast<std::size_t>(i)] = featurize(epochs[static_cast<std::size_t>(i)]); });
  }
  err.rethrow();
  return out;
}

std::array<double, kFeatures> abs_tstats(std::span<const FeatureMatrix> rows, std::span<const int> labels) {
  if (rows.size() != labels.size()) throw std::invalid_argument("abs_tstats: row/label count mismatch");
  std::array<double, kFeatures> out{};
  FirstError err;
#pragma omp parallel
  {
    std::vector<double> g1, g0;
    g1.reserve(rows.size());
    g0.reserve(rows.size());
#pragma omp for schedule(static)
    for (int f = 0; f < kFeatures; ++f) {
      g1.clear();
      g0.clear();
      for (std::size_t i = 0; i < rows.size(); ++i) {
        (labels[i] == 1 ? g1 : g0).push_back(rows[i].values[static_cast<std::size_t>(f)]);
      }
      err.run([&] { out[static_cast<std::size_t>(f)] = std::abs(welch_t(g1, g0)); });
    }
  }
  err.rethrow();
  return out;
}

}  // namespace kernels::omp
}  // namespace neuroadapt
