// Acceptance suite: one PASS/FAIL line per criterion, exit 1 on any FAIL.

#include "neuroadapt/analysis.hpp"
#include "neuroadapt/bandit.hpp"
#include "neuroadapt/cli.hpp"
#include "neuroadapt/config.hpp"
#include "neuroadapt/decoder.hpp"
#include "neuroadapt/io.hpp"
#include "neuroadapt/monte_carlo.hpp"
#include "neuroadapt/robust_stats.hpp"
#include "neuroadapt/session.hpp"

#include "support.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace neuroadapt;

namespace {

struct Verdict {
  bool pass{false};
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---- formula fidelity ----------------------------------------------------

constexpr double kExact = 1e-12;

struct Tally {
  int total{0};
  int ok{0};
  double worst{0.0};
  void check(double got, double want) {
    ++total;
    const double err = std::abs(got - want);
    worst = std::max(worst, err);
    if (err <= kExact || (std::isinf(got) && std::isinf(want))) ++ok;
  }
  bool passed() const { return total >= 10 && ok == total; }
};

double log10_factorial(int n) { return std::lgamma(n + 1.0) / std::log(10.0); }

Verdict formula_fidelity() {
  Tally ucb, upd, alpha, eps;

  // ucb_value = Q + c sqrt(log10 t / N), +inf when unvisited
  {
    AgentConfig c;
    AgentState s = AgentState::initial(c);
    s.q = {0.5, 0.2, 0.9, 1.0};
    s.n = {4, 1, 0, 25};
    ucb.check(ucb_value(s, ActionId{0}, c, 100), 0.5 + 0.25 * std::sqrt(2.0 / 4.0));
    ucb.check(ucb_value(s, ActionId{1}, c, 10), 0.2 + 0.25);
    ucb.check(ucb_value(s, ActionId{1}, c, 1), 0.2);
    ucb.check(ucb_value(s, ActionId{2}, c, 50), std::numeric_limits<double>::infinity());
    ucb.check(ucb_value(s, ActionId{3}, c, 1000), 1.0 + 0.25 * std::sqrt(3.0 / 25.0));
    ucb.check(ucb_value(s, ActionId{0}, c, 10000), 0.5 + 0.25 * 1.0);
    c.c = 1.0;
    ucb.check(ucb_value(s, ActionId{3}, c, 100000), 1.0 + std::sqrt(5.0) / 5.0);
    ucb.check(ucb_value(s, ActionId{1}, c, 7), 0.2 + std::sqrt(std::log10(7.0)));
    c.c = 0.0;
    ucb.check(ucb_value(s, ActionId{0}, c, 60), 0.5);
    c.c = 2.0;
    s.n[0] = 9;
    ucb.check(ucb_value(s, ActionId{0}, c, 1000), 0.5 + 2.0 * std::sqrt(3.0 / 9.0));
    s.t = 99;  // default decision index = t + 1 = 100
    ucb.check(ucb_value(s, ActionId{0}, c), 0.5 + 2.0 * std::sqrt(2.0 / 9.0));
  }

  // Q(a) <- (1 - alpha) Q(a) + alpha (r - gamma max Q)
  {
    auto fixture = [&](std::array<double, 4> q, int a, double r, double alpha0, double gamma, double want) {
      AgentConfig c;
      c.alpha0 = alpha0;
      c.gamma = gamma;
      AgentState s = AgentState::initial(c);
      s.q = q;
      const AgentState n = update_q(s, ActionId{a}, Reward::make(r, RewardSource::explicit_rating), c);
      upd.check(n.q[static_cast<std::size_t>(a)], want);
    };
    fixture({1, 1, 1, 1}, 0, 1.0, 0.5, 0.95, 0.525);
    fixture({1, 1, 1, 1}, 2, 0.0, 0.5, 0.95, 0.5 - 0.5 * 0.95);
    fixture({0.2, 0.8, 0.4, 0.1}, 0, 0.6, 0.5, 0.95, 0.1 + 0.5 * (0.6 - 0.76));
    fixture({0.2, 0.8, 0.4, 0.1}, 1, 1.0, 0.25, 0.9, 0.6 + 0.25 * (1.0 - 0.72));
    fixture({0.0, 0.0, 0.0, 0.0}, 3, 0.3, 0.5, 0.95, 0.15);
    fixture({0.5, 0.5, 0.5, 0.5}, 1, 0.5, 1.0, 0.0, 0.5);
    fixture({0.3, 0.6, 0.9, 0.2}, 2, 0.7, 0.1, 0.95, 0.81 + 0.1 * (0.7 - 0.855));
    fixture({-0.2, -0.4, -0.1, -0.3}, 0, 0.0, 0.5, 0.95, -0.1 + 0.5 * 0.095);
    fixture({1, 1, 1, 1}, 0, 1.0, 0.001, 0.95, 0.999 + 0.001 * 0.05);
    fixture({0.7, 0.1, 0.1, 0.1}, 3, 0.9, 0.4, 0.5, 0.06 + 0.4 * 0.55);
    fixture({1, 0, 0, 0}, 0, 0.0, 0.5, 1.0, 0.0);
    // non-updated arms stay put
    AgentConfig c;
    const AgentState s = AgentState::initial(c);
    const AgentState n = update_q(s, ActionId{0}, Reward::make(1.0, RewardSource::explicit_rating), c);
    upd.check(n.q[1], 1.0);
  }

  // per_step: max(x_min, x0 - log10(t + 1) / k); cumulative: log10((t + 1)!)
  {
    AgentConfig per;
    per.decay = DecayMode::per_step;
    AgentConfig cum;
    cum.decay = DecayMode::cumulative;
    alpha.check(alpha_schedule(99, per), 0.45);
    eps.check(epsilon_schedule(99, per), 0.9);
    for (int t : {0, 1, 9, 42, 999}) {
      alpha.check(alpha_schedule(t, per), std::max(0.001, 0.5 - std::log10(t + 1.0) / 40.0));
      eps.check(epsilon_schedule(t, per), std::max(0.01, 1.0 - std::log10(t + 1.0) / 20.0));
    }
    for (int t : {0, 1, 3, 10, 20, 59}) {
      alpha.check(alpha_schedule(t, cum), std::max(0.001, 0.5 - log10_factorial(t + 1) / 40.0));
      eps.check(epsilon_schedule(t, cum), std::max(0.01, 1.0 - log10_factorial(t + 1) / 20.0));
    }
    per.alpha_min = 0.46;
    alpha.check(alpha_schedule(99, per), 0.46);
  }

  const bool ok = ucb.passed() && upd.passed() && alpha.passed() && eps.passed();
  return {ok, fmt("ucb %d/%d, update %d/%d, alpha %d/%d, epsilon %d/%d, worst err %.1e", ucb.ok, ucb.total, upd.ok,
                  upd.total, alpha.ok, alpha.total, eps.ok, eps.total,
                  std::max({ucb.worst, upd.worst, alpha.worst, eps.worst}))};
}

// ---- noiseless convergence -----------------------------------------------

Verdict noiseless_convergence() {
  const AgentConfig agent;  // max_trials 60
  int correct = 0;
  constexpr int kRuns = 200;
  for (int i = 0; i < kRuns; ++i) {
    const ActionId best{i % kNumActions};
    const FeedbackFn oracle = [best](ActionId c, int) {
      return Reward::make(c == best ? 1.0 : 0.0, RewardSource::explicit_rating);
    };
    const auto log = run_adaptive_block(agent, Block::explicit_feedback, 1000 + static_cast<std::uint64_t>(i), oracle,
                                        0, 8000);
    if (!log.empty() && log.back().converged == best && log.size() <= 60) ++correct;
  }
  const double rate = static_cast<double>(correct) / kRuns;
  return {rate >= 0.9, fmt("%d/%d converged-correct within 60 trials (rate %.3f, need >= 0.90)", correct, kRuns, rate)};
}

// ---- decoder -------------------------------------------------------------

// The training block and decoder fit exactly as a full session runs them.
DecoderBundle fit_for_seed(const ExperimentConfig& config, std::uint64_t seed) {
  Rng order_rng(derive_seed(seed, "training/order"));
  Rng trial_rng(derive_seed(seed, "training/trials"));
  TrainingSource source = [&](ActionId c, int session_t, int trial_id) {
    return synth_training_trial(config.profile, config.erp, c, session_t, trial_id, trial_rng).epoch;
  };
  const TrainingBlockResult training = run_training_block(config, order_rng, source);
  Rng split_rng(derive_seed(seed, "decoder/split"));
  return grid_search_fit(training.prepared.data, split_rng, config.decoder);
}

Verdict decoder_operating_point() {
  const ExperimentConfig config = load_preset("paper-calibrated");
  std::vector<double> f1;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) f1.push_back(fit_for_seed(config, seed).cv_f1);
  const Describe d = describe(f1);
  const bool ok = d.mean >= 0.7 && d.mean <= 0.9;
  return {ok, fmt("paper-calibrated, 20 seeds: mean cv F1 %.3f (SD %.3f, range %.3f..%.3f), need mean in [0.7, 0.9]",
                  d.mean, d.sd, d.min, d.max)};
}

Verdict feature_localization() {
  const ExperimentConfig config = load_preset("high-snr");
  std::vector<bool> planted_channel(kChannels, false);
  for (int ch : config.erp.effect_channels) planted_channel[static_cast<std::size_t>(ch)] = true;
  const int w_lo = feature_window_at_ms(static_cast<int>(config.erp.effect_start_ms));
  const int w_hi = feature_window_at_ms(static_cast<int>(config.erp.effect_end_ms)) - 1;

  int inside = 0, total = 0;
  constexpr int kSeeds = 10;
  for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
    for (const FeatureIndex& f : fit_for_seed(config, seed).selected_features) {
      ++total;
      if (planted_channel[static_cast<std::size_t>(f.channel)] && f.window >= w_lo && f.window <= w_hi) ++inside;
    }
  }
  const double frac = total ? static_cast<double>(inside) / total : 0.0;
  return {frac >= 0.5, fmt("high-snr, %d seeds: %d/%d selected features in planted channels x windows %d..%d (%.3f, "
                           "need >= 0.50)",
                           kSeeds, inside, total, w_lo, w_hi, frac)};
}

// ---- TOST ----------------------------------------------------------------

Verdict tost_reproduction() {
  const TostResult r = tost_from_summary(0.0, 11.6, 8, 5.0);
  const bool ok = std::abs(r.t_lower - 1.22) <= 0.02 && std::abs(r.p_lower - 0.26) <= 0.02 && !r.equivalent;
  return {ok, fmt("n=8 mean 0 sd 11.6 bound 5: t(%.0f) = %.4f, p = %.4f, equivalent = %s", r.df, r.t_lower, r.p_lower,
                  r.equivalent ? "true" : "false")};
}

// ---- oracle equivalences -------------------------------------------------

double type7(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

Verdict oracle_equivalences() {
  std::mt19937_64 gen(20240611);
  auto uniform_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen); };
  // Coarse grid values so ties are common.
  auto draw_values = [&](int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (auto& x : v) x = uniform_int(0, 12) * 0.25 + (uniform_int(0, 9) == 0 ? 20.0 : 0.0);
    return v;
  };
  int tukey_ok = 0, auc_ok = 0, split_ok = 0, table_ok = 0;
  constexpr int kInstances = 100;

  for (int i = 0; i < kInstances; ++i) {
    // Tukey fences
    {
      const auto v = draw_values(uniform_int(4, 25));
      const double q1 = type7(v, 0.25), q3 = type7(v, 0.75), iqr = q3 - q1;
      std::vector<bool> want;
      for (double x : v) want.push_back(x < q1 - 1.5 * iqr || x > q3 + 1.5 * iqr);
      if (tukey_mask(v) == want) ++tukey_ok;
    }
    // AUC against Mann-Whitney pair counting
    {
      const int n = uniform_int(4, 30);
      std::vector<double> scores;
      std::vector<int> labels;
      for (int k = 0; k < n; ++k) {
        scores.push_back(uniform_int(0, 10) / 10.0);
        labels.push_back(k < 2 ? k : uniform_int(0, 1));
      }
      double wins = 0.0, pairs = 0.0;
      for (std::size_t p = 0; p < scores.size(); ++p) {
        for (std::size_t q = 0; q < scores.size(); ++q) {
          if (labels[p] != 1 || labels[q] != 0) continue;
          pairs += 1.0;
          wins += scores[p] > scores[q] ? 1.0 : scores[p] == scores[q] ? 0.5 : 0.0;
        }
      }
      if (std::abs(compute_metrics(scores, labels).auc - wins / pairs) <= 1e-12) ++auc_ok;
    }
    // Median split: strict sides by value, ties to the currently smaller class
    {
      const auto v = draw_values(uniform_int(2, 25));
      const double med = type7(v, 0.5);
      std::vector<int> want(v.size(), -1);
      int zeros = 0, ones = 0;
      for (std::size_t k = 0; k < v.size(); ++k) {
        if (v[k] < med) want[k] = 0, ++zeros;
        if (v[k] > med) want[k] = 1, ++ones;
      }
      for (std::size_t k = 0; k < v.size(); ++k) {
        if (want[k] != -1) continue;
        if (ones < zeros) want[k] = 1, ++ones;
        else want[k] = 0, ++zeros;
      }
      const MedianSplit got = median_split(v);
      if (got.labels == want && std::abs(got.threshold - med) <= 1e-12) ++split_ok;
    }
    // Contingency table
    {
      const int n = uniform_int(1, 40);
      std::vector<SessionResult> results(static_cast<std::size_t>(n));
      int want[3][3] = {};
      for (auto& r : results) {
        const int e = uniform_int(0, 2), m = uniform_int(0, 2);
        r.explicit_outcome = static_cast<Outcome>(e);
        r.implicit_outcome = static_cast<Outcome>(m);
        ++want[e][m];
      }
      const Contingency got = contingency(results);
      bool same = true;
      for (int e = 0; e < 3; ++e)
        for (int m = 0; m < 3; ++m) same = same && got[static_cast<std::size_t>(e)][static_cast<std::size_t>(m)] == want[e][m];
      if (same) ++table_ok;
    }
  }
  const bool ok = tukey_ok == kInstances && auc_ok == kInstances && split_ok == kInstances && table_ok == kInstances;
  return {ok, fmt("tukey %d/%d, auc %d/%d, median split %d/%d, contingency %d/%d", tukey_ok, kInstances, auc_ok,
                  kInstances, split_ok, kInstances, table_ok, kInstances)};
}

// ---- end to end ----------------------------------------------------------

MonteCarloResult g_mc;

Verdict end_to_end() {
  const ExperimentConfig config = load_preset("paper-calibrated");
  const auto seeds = seed_range(1, 500);
  g_mc = monte_carlo(config, seeds);
  const AnalysisReport& r = g_mc.report;
  const int neither = r.table[static_cast<std::size_t>(Outcome::not_converged)]
                             [static_cast<std::size_t>(Outcome::not_converged)];
  const bool ok = std::abs(r.step_diff.mean) <= 3.0 && r.step_diff.sd >= 5.0 && neither > 0;
  return {ok, fmt("500 runs: step diff implicit-explicit mean %.2f (SD %.2f, n %d), neither-converged cell %d", r.step_diff.mean,
                  r.step_diff.sd, r.step_diff.n, neither)};
}

// ---- determinism / replay ------------------------------------------------

Verdict determinism() {
  const ExperimentConfig config = load_preset("paper-calibrated");
  if (g_mc.sessions.empty()) g_mc = monte_carlo(config, seed_range(1, 20));

  // In-memory logs of every session.
  std::size_t replayed = 0, failed = 0;
  for (const SessionResult& s : g_mc.sessions) {
    for (const auto& [seed, log] : {std::pair{s.agent_seed_explicit, &s.explicit_log},
                                    std::pair{s.agent_seed_implicit, &s.implicit_log}}) {
      ++replayed;
      if (!replay_block(config.agent, seed, *log).identical) ++failed;
    }
  }

  // Logs through the JSON Lines file format.
  const fs::path dir = testing::temp_dir("acceptance");
  std::size_t file_failed = 0;
  constexpr int kFileRuns = 25;
  for (int i = 0; i < kFileRuns && i < static_cast<int>(g_mc.sessions.size()); ++i) {
    const SessionResult& s = g_mc.sessions[static_cast<std::size_t>(i)];
    const fs::path p = dir / ("s" + std::to_string(i) + ".jsonl");
    write_session_log(p, make_header(config, s, i), s);
    const SessionLog log = read_session_log(p);
    const bool same = replay_block(log.header.agent, log.header.agent_seed_explicit, log.explicit_log).identical &&
                      replay_block(log.header.agent, log.header.agent_seed_implicit, log.implicit_log).identical;
    if (!same) ++file_failed;
  }

  // simulate twice (different thread counts) must produce identical bytes.
  auto simulate = [&](const fs::path& out, const char* parallelism) {
    const std::string out_s = out.string();
    const char* argv[] = {"neuroadapt", "simulate", "--preset", "paper-calibrated", "--seed", "11", "--runs", "4",
                          "--out", out_s.c_str(), "--parallelism", parallelism};
    std::ostringstream o, e;
    return run_cli(12, argv, o, e);
  };
  const bool ran = simulate(dir / "a", "1") == 0 && simulate(dir / "b", "4") == 0;
  std::size_t files = 0, differing = 0;
  if (ran) {
    for (const auto& entry : fs::directory_iterator(dir / "a")) {
      ++files;
      const fs::path other = dir / "b" / entry.path().filename();
      if (!fs::exists(other) || testing::read_file(entry.path()) != testing::read_file(other)) ++differing;
    }
  }
  fs::remove_all(dir);

  const bool ok = failed == 0 && file_failed == 0 && ran && files > 0 && differing == 0;
  return {ok, fmt("replayed %zu blocks in memory (%zu mismatches), %d via log files (%zu mismatches); "
                  "simulate x2: %zu files, %zu differing",
                  replayed, failed, kFileRuns, file_failed, files, differing)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria{
      {"formula-fidelity", formula_fidelity},
      {"noiseless-convergence", noiseless_convergence},
      {"decoder-operating-point", decoder_operating_point},
      {"feature-localization", feature_localization},
      {"tost-reproduction", tost_reproduction},
      {"oracle-equivalences", oracle_equivalences},
      {"end-to-end-monte-carlo", end_to_end},
      {"determinism-replay", determinism},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!v.pass) ++failures;
    std::cout << (v.pass ? "PASS " : "FAIL ") << c.name << ": " << v.detail << " [" << fmt("%.1f", secs) << " s]"
              << std::endl;
  }
  std::cout << (failures ? "acceptance: " + std::to_string(failures) + " criteria failed" : "acceptance: all passed")
            << std::endl;
  return failures ? 1 : 0;
}
