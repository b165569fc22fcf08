#include "neuroadapt/monte_carlo.hpp"

#include <omp.h>

#include <exception>
#include <stdexcept>
#include <string>

namespace neuroadapt {

std::vector<std::uint64_t> seed_range(std::uint64_t base, int n) {
  if (n < 0) throw std::invalid_argument("seed_range: n must be >= 0");
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) seeds[static_cast<std::size_t>(i)] = base + static_cast<std::uint64_t>(i);
  return seeds;
}

MonteCarloResult monte_carlo(const ExperimentConfig& config, std::span<const std::uint64_t> seeds,
                             const MonteCarloOptions& options) {
  if (seeds.empty()) throw std::invalid_argument("monte_carlo: need at least one run");
  config.validate();

  const std::size_t n = seeds.size();
  MonteCarloResult out;
  out.sessions.resize(n);
  if (options.keep_training_epochs) out.training_epochs.resize(n);
  std::vector<std::exception_ptr> errors(n);

  auto run_one = [&](std::size_t i, Execution inner) {
    try {
      SessionOptions so;
      so.exec = inner;
      if (options.keep_training_epochs) so.training_epochs_out = &out.training_epochs[i];
      out.sessions[i] = run_full_session(config, seeds[i], static_cast<int>(i), so);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  if (options.exec == Execution::parallel && n > 1) {
    const int threads = options.parallelism > 0 ? options.parallelism : omp_get_max_threads();
    const auto count = static_cast<std::ptrdiff_t>(n);
    // Sessions are the parallel unit; the kernels inside each run serially.
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (std::ptrdiff_t i = 0; i < count; ++i) run_one(static_cast<std::size_t>(i), Execution::serial);
  } else {
    for (std::size_t i = 0; i < n; ++i) run_one(i, options.exec);
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& e) {
      throw std::runtime_error("run " + std::to_string(i) + " (seed " + std::to_string(seeds[i]) + "): " + e.what());
    }
  }

  out.report = analyze(out.sessions, options.analysis);
  return out;
}

}  // namespace neuroadapt
