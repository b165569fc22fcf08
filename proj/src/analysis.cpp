#include "neuroadapt/analysis.hpp"

#include "neuroadapt/robust_stats.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

namespace neuroadapt {

namespace {

using boost::math::students_t;

double two_sided_p(double t, double df) {
  if (std::isinf(t)) return 0.0;
  return 2.0 * boost::math::cdf(boost::math::complement(students_t(df), std::abs(t)));
}

std::size_t outcome_index(Outcome o) { return static_cast<std::size_t>(o); }

}  // namespace

double student_t_cdf(double t, double df) {
  if (!(df > 0.0)) throw std::invalid_argument("student_t_cdf: df must be > 0");
  if (std::isnan(t)) throw std::invalid_argument("student_t_cdf: t is NaN");
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  return boost::math::cdf(students_t(df), t);
}

double student_t_quantile(double p, double df) {
  if (!(df > 0.0)) throw std::invalid_argument("student_t_quantile: df must be > 0");
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("student_t_quantile: p must be in (0, 1)");
  return boost::math::quantile(students_t(df), p);
}

TTest one_sample_ttest(std::span<const double> values, double mu0) {
  if (values.size() < 2) throw std::invalid_argument("one_sample_ttest: need at least 2 values");
  const double v = variance(values);
  if (!(v > 0.0)) throw std::invalid_argument("one_sample_ttest: zero variance");
  const double n = static_cast<double>(values.size());
  TTest out;
  out.df = n - 1.0;
  out.t = (mean(values) - mu0) / std::sqrt(v / n);
  out.p = two_sided_p(out.t, out.df);
  return out;
}

std::string_view tost_tails_name(TostTails t) { return t == TostTails::one_sided ? "one-sided" : "two-sided"; }

TostTails parse_tost_tails(std::string_view s) {
  if (s == "one-sided") return TostTails::one_sided;
  if (s == "two-sided") return TostTails::two_sided;
  throw std::invalid_argument("unknown TOST tail convention '" + std::string(s) + "'");
}

TostResult tost_from_summary(double m, double sd, int n, double bound, TostTails tails, double alpha) {
  if (n < 2) throw std::invalid_argument("tost: need at least 2 values");
  if (!(sd > 0.0)) throw std::invalid_argument("tost: zero variance");
  if (!(bound >= 0.0)) throw std::invalid_argument("tost: bound must be >= 0");
  TostResult r;
  r.n = n;
  r.mean = m;
  r.sd = sd;
  r.bound = bound;
  r.df = n - 1.0;
  r.se = sd / std::sqrt(static_cast<double>(n));
  r.t_lower = (m + bound) / r.se;
  r.t_upper = (m - bound) / r.se;
  if (tails == TostTails::one_sided) {
    r.p_lower = 1.0 - student_t_cdf(r.t_lower, r.df);
    r.p_upper = student_t_cdf(r.t_upper, r.df);
  } else {
    r.p_lower = two_sided_p(r.t_lower, r.df);
    r.p_upper = two_sided_p(r.t_upper, r.df);
  }
  r.equivalent = r.t_lower > 0.0 && r.t_upper < 0.0 && r.p_lower < alpha && r.p_upper < alpha;
  return r;
}

TostResult tost_equivalence(std::span<const double> diffs, double bound, TostTails tails, double alpha) {
  if (diffs.size() < 2) throw std::invalid_argument("tost: need at least 2 values");
  return tost_from_summary(mean(diffs), std::sqrt(variance(diffs)), static_cast<int>(diffs.size()), bound, tails,
                           alpha);
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
  if (x.size() < 3) throw std::invalid_argument("pearson: need at least 3 pairs");
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw std::invalid_argument("pearson: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

Contingency contingency(std::span<const std::pair<Outcome, Outcome>> outcomes) {
  Contingency t{};
  for (const auto& [e, i] : outcomes) t[outcome_index(e)][outcome_index(i)] += 1;
  return t;
}

Contingency contingency(std::span<const SessionResult> results) {
  Contingency t{};
  for (const auto& r : results) t[outcome_index(r.explicit_outcome)][outcome_index(r.implicit_outcome)] += 1;
  return t;
}

std::string_view non_converged_name(NonConverged p) {
  return p == NonConverged::impute_max_trials ? "impute-max-trials" : "exclude";
}

NonConverged parse_non_converged(std::string_view s) {
  if (s == "exclude") return NonConverged::exclude;
  if (s == "impute-max-trials") return NonConverged::impute_max_trials;
  throw std::invalid_argument("unknown non-converged policy '" + std::string(s) + "'");
}

std::vector<double> step_differences(std::span<const SessionResult> results, NonConverged policy, int max_trials) {
  std::vector<double> out;
  for (const auto& r : results) {
    std::optional<int> se = r.steps_explicit;
    std::optional<int> si = r.steps_implicit;
    if (policy == NonConverged::impute_max_trials) {
      if (!se) se = max_trials;
      if (!si) si = max_trials;
    }
    if (se && si) out.push_back(static_cast<double>(*si - *se));
  }
  return out;
}

std::vector<double> drift_correlations(std::span<const SessionResult> results) {
  std::vector<double> out;
  for (const auto& r : results) {
    std::vector<double> x, y;
    for (const auto& rec : r.training_log) {
      x.push_back(rec.session_t);
      y.push_back(rec.reward);
    }
    if (x.size() < 3) continue;
    const auto [mn, mx] = std::minmax_element(y.begin(), y.end());
    if (*mn == *mx) continue;
    out.push_back(pearson(x, y));
  }
  return out;
}

Describe describe(std::span<const double> values) {
  Describe d;
  d.n = static_cast<int>(values.size());
  if (values.empty()) return d;
  d.mean = mean(values);
  d.sd = values.size() > 1 ? std::sqrt(variance(values)) : 0.0;
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  d.min = *mn;
  d.max = *mx;
  return d;
}

namespace {

BlockStats block_stats(std::span<const SessionResult> results, bool explicit_block) {
  BlockStats s;
  if (results.empty()) return s;
  std::vector<double> steps;
  int converged = 0, correct = 0;
  for (const auto& r : results) {
    const Outcome o = explicit_block ? r.explicit_outcome : r.implicit_outcome;
    const auto st = explicit_block ? r.steps_explicit : r.steps_implicit;
    if (o != Outcome::not_converged) ++converged;
    if (o == Outcome::converged_correct) ++correct;
    if (st) steps.push_back(*st);
  }
  const double n = static_cast<double>(results.size());
  s.converged_rate = converged / n;
  s.correct_rate = correct / n;
  s.steps = describe(steps);
  return s;
}

}  // namespace

AnalysisReport analyze(std::span<const SessionResult> results, const AnalysisOptions& options) {
  AnalysisReport r;
  r.n_runs = static_cast<int>(results.size());
  r.options = options;
  r.explicit_block = block_stats(results, true);
  r.implicit_block = block_stats(results, false);
  r.step_diffs = step_differences(results, options.policy, options.max_trials);
  r.step_diff = describe(r.step_diffs);
  if (r.step_diffs.size() >= 2 && r.step_diff.sd > 0.0) {
    r.tost = tost_equivalence(r.step_diffs, options.tost_bound, options.tails);
  }
  r.table = contingency(results);
  r.drift_rho = drift_correlations(results);
  r.drift = describe(r.drift_rho);
  if (r.drift_rho.size() >= 2 && r.drift.sd > 0.0) r.drift_ttest = one_sample_ttest(r.drift_rho, 0.0);

  std::vector<double> f1, rejected;
  for (const auto& s : results) {
    f1.push_back(s.bundle.cv_f1);
    rejected.push_back(s.training.n_rejected_amplitude + s.training.n_rejected_behavior);
  }
  r.cv_f1 = describe(f1);
  r.rejected = describe(rejected);
  return r;
}

namespace {

nlohmann::json describe_json(const Describe& d) {
  return {{"n", d.n}, {"mean", d.mean}, {"sd", d.sd}, {"min", d.min}, {"max", d.max}};
}

nlohmann::json block_json(const BlockStats& b) {
  return {{"converged_rate", b.converged_rate}, {"correct_rate", b.correct_rate}, {"steps", describe_json(b.steps)}};
}

}  // namespace

nlohmann::json tost_to_json(const TostResult& t) {
  return {{"n", t.n},           {"mean", t.mean},       {"sd", t.sd},           {"se", t.se},
          {"df", t.df},         {"bound", t.bound},     {"t_lower", t.t_lower}, {"t_upper", t.t_upper},
          {"p_lower", t.p_lower}, {"p_upper", t.p_upper}, {"equivalent", t.equivalent}};
}

nlohmann::json report_to_json(const AnalysisReport& r) {
  nlohmann::json j;
  j["n_runs"] = r.n_runs;
  j["options"] = {{"non_converged", non_converged_name(r.options.policy)},
                  {"max_trials", r.options.max_trials},
                  {"tost_bound", r.options.tost_bound},
                  {"tost_tails", tost_tails_name(r.options.tails)}};
  j["explicit"] = block_json(r.explicit_block);
  j["implicit"] = block_json(r.implicit_block);
  j["step_difference"] = describe_json(r.step_diff);
  j["tost"] = r.tost ? tost_to_json(*r.tost) : nlohmann::json(nullptr);

  nlohmann::json table = nlohmann::json::object();
  for (int e = 0; e < 3; ++e) {
    nlohmann::json row = nlohmann::json::object();
    for (int i = 0; i < 3; ++i) {
      row[std::string(outcome_name(static_cast<Outcome>(i)))] =
          r.table[static_cast<std::size_t>(e)][static_cast<std::size_t>(i)];
    }
    table[std::string(outcome_name(static_cast<Outcome>(e)))] = row;
  }
  j["contingency"] = {{"rows", "explicit"}, {"columns", "implicit"}, {"counts", table}};

  j["drift"] = describe_json(r.drift);
  j["drift_ttest"] =
      r.drift_ttest ? nlohmann::json{{"t", r.drift_ttest->t}, {"df", r.drift_ttest->df}, {"p", r.drift_ttest->p}}
                    : nlohmann::json(nullptr);
  j["decoder_cv_f1"] = describe_json(r.cv_f1);
  j["rejected_trials"] = describe_json(r.rejected);
  return j;
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  return f;
}

std::string opt_int(const std::optional<int>& v) { return v ? std::to_string(*v) : std::string(); }

}  // namespace

void write_steps_csv(const std::filesystem::path& path, std::span<const SessionResult> results) {
  auto f = open_csv(path);
  f << "run,seed,order,truth,explicit_outcome,implicit_outcome,steps_explicit,steps_implicit,difference,cv_f1\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    std::string diff;
    if (r.steps_explicit && r.steps_implicit) diff = std::to_string(*r.steps_implicit - *r.steps_explicit);
    f << i << ',' << r.seed << ',' << block_order_name(r.order) << ',' << condition_name(r.truth) << ','
      << outcome_name(r.explicit_outcome) << ',' << outcome_name(r.implicit_outcome) << ','
      << opt_int(r.steps_explicit) << ',' << opt_int(r.steps_implicit) << ',' << diff << ','
      << nlohmann::json(r.bundle.cv_f1).dump() << '\n';
  }
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

void write_contingency_csv(const std::filesystem::path& path, const Contingency& table) {
  auto f = open_csv(path);
  f << "explicit\\implicit";
  for (int i = 0; i < 3; ++i) f << ',' << outcome_name(static_cast<Outcome>(i));
  f << '\n';
  for (int e = 0; e < 3; ++e) {
    f << outcome_name(static_cast<Outcome>(e));
    for (int i = 0; i < 3; ++i) f << ',' << table[static_cast<std::size_t>(e)][static_cast<std::size_t>(i)];
    f << '\n';
  }
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace neuroadapt
