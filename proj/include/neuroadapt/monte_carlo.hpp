#pragma once

#include "neuroadapt/analysis.hpp"
#include "neuroadapt/config.hpp"
#include "neuroadapt/session.hpp"

#include <cstdint>
#include <vector>

namespace neuroadapt {

// Run seeds base, base + 1, ..., base + n - 1.
std::vector<std::uint64_t> seed_range(std::uint64_t base, int n);

struct MonteCarloOptions {
  Execution exec{Execution::parallel};  // fan sessions out over OpenMP threads
  int parallelism{0};                   // 0 = OpenMP default
  AnalysisOptions analysis;
  // Keeps the raw training epochs of every run (index-aligned with sessions).
  bool keep_training_epochs{false};
};

struct MonteCarloResult {
  std::vector<SessionResult> sessions;  // in seed order
  std::vector<std::vector<Epoch>> training_epochs;
  AnalysisReport report;
};

// Independent sessions, one per seed, run index = position in `seeds`.
// Results do not depend on the thread count. Session-level errors are
// rethrown after the batch with the failing seed in the message.
MonteCarloResult monte_carlo(const ExperimentConfig& config, std::span<const std::uint64_t> seeds,
                             const MonteCarloOptions& options = {});

}  // namespace neuroadapt
