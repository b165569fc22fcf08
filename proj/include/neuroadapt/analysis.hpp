#pragma once

#include "neuroadapt/session.hpp"

#include <json.hpp>

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace neuroadapt {

// Student t distribution, backed by Boost.Math (incomplete beta).
double student_t_cdf(double t, double df);
double student_t_quantile(double p, double df);

struct TTest {
  double t{0.0};
  double df{0.0};
  double p{1.0};  // two-sided
};

// Two-sided one-sample t-test against mu0. Throws std::invalid_argument on
// n < 2 or zero variance.
TTest one_sample_ttest(std::span<const double> values, double mu0 = 0.0);

// How each TOST p-value is read off the t distribution. one_sided is the
// textbook construction (P(T > t_lower), P(T < t_upper)); two_sided reports
// 2 * P(T > |t|) for each bound statistic, the convention that reproduces
// the published equivalence figures.
enum class TostTails { two_sided, one_sided };
std::string_view tost_tails_name(TostTails t);
TostTails parse_tost_tails(std::string_view s);

struct TostResult {
  int n{0};
  double mean{0.0};
  double sd{0.0};
  double se{0.0};
  double df{0.0};
  double bound{0.0};
  double t_lower{0.0};  // (mean + bound) / se
  double t_upper{0.0};  // (mean - bound) / se
  double p_lower{1.0};
  double p_upper{1.0};
  bool equivalent{false};  // t_lower > 0, t_upper < 0, both p < alpha
};

// Throws std::invalid_argument on n < 2, zero variance or bound < 0.
TostResult tost_equivalence(std::span<const double> diffs, double bound = 5.0, TostTails tails = TostTails::two_sided,
                            double alpha = 0.05);
// Same test from summary statistics.
TostResult tost_from_summary(double mean, double sd, int n, double bound = 5.0, TostTails tails = TostTails::two_sided,
                             double alpha = 0.05);

// Product-moment correlation. Throws std::invalid_argument on length
// mismatch, n < 3 or zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

// counts[explicit_outcome][implicit_outcome], outcome order as in Outcome.
using Contingency = std::array<std::array<int, 3>, 3>;
Contingency contingency(std::span<const SessionResult> results);
Contingency contingency(std::span<const std::pair<Outcome, Outcome>> outcomes);

enum class NonConverged { exclude, impute_max_trials };
std::string_view non_converged_name(NonConverged p);
NonConverged parse_non_converged(std::string_view s);

// implicit - explicit steps per run. With `exclude`, runs where either block
// did not converge are dropped; with `impute_max_trials` a missing count is
// replaced by max_trials.
std::vector<double> step_differences(std::span<const SessionResult> results, NonConverged policy, int max_trials);

// Pearson(session time, rating) over each session's training block; runs
// with constant ratings are skipped.
std::vector<double> drift_correlations(std::span<const SessionResult> results);

struct Describe {
  int n{0};
  double mean{0.0};
  double sd{0.0};  // 0 when n < 2
  double min{0.0};
  double max{0.0};
};
Describe describe(std::span<const double> values);

struct BlockStats {
  double converged_rate{0.0};
  double correct_rate{0.0};
  Describe steps;  // converged runs only
};

struct AnalysisOptions {
  NonConverged policy{NonConverged::exclude};
  int max_trials{60};
  double tost_bound{5.0};
  TostTails tails{TostTails::two_sided};
};

struct AnalysisReport {
  int n_runs{0};
  AnalysisOptions options;
  BlockStats explicit_block;
  BlockStats implicit_block;
  std::vector<double> step_diffs;
  Describe step_diff;
  std::optional<TostResult> tost;  // absent when fewer than 2 diffs or zero variance
  Contingency table{};
  std::vector<double> drift_rho;
  Describe drift;
  std::optional<TTest> drift_ttest;
  Describe cv_f1;
  Describe rejected;  // amplitude + behavioural rejections per session
};

AnalysisReport analyze(std::span<const SessionResult> results, const AnalysisOptions& options = {});

nlohmann::json report_to_json(const AnalysisReport& r);
nlohmann::json tost_to_json(const TostResult& t);

// steps.csv: one row per run. contingency.csv: 3x3 with labelled rows.
void write_steps_csv(const std::filesystem::path& path, std::span<const SessionResult> results);
void write_contingency_csv(const std::filesystem::path& path, const Contingency& table);

}  // namespace neuroadapt
