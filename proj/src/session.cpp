#include "neuroadapt/session.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

namespace neuroadapt {

std::string_view block_name(Block b) {
  switch (b) {
    case Block::training: return "training";
    case Block::explicit_feedback: return "explicit";
    case Block::implicit_feedback: return "implicit";
  }
  return "training";
}

Block parse_block(std::string_view s) {
  if (s == "training") return Block::training;
  if (s == "explicit") return Block::explicit_feedback;
  if (s == "implicit") return Block::implicit_feedback;
  throw std::invalid_argument("unknown block '" + std::string(s) + "'");
}

std::string_view outcome_name(Outcome o) {
  switch (o) {
    case Outcome::converged_correct: return "converged-correct";
    case Outcome::converged_incorrect: return "converged-incorrect";
    case Outcome::not_converged: return "not-converged";
  }
  return "not-converged";
}

Outcome parse_outcome(std::string_view s) {
  if (s == "converged-correct") return Outcome::converged_correct;
  if (s == "converged-incorrect") return Outcome::converged_incorrect;
  if (s == "not-converged") return Outcome::not_converged;
  throw std::invalid_argument("unknown outcome '" + std::string(s) + "'");
}

AdaptiveBlock::AdaptiveBlock(const AgentConfig& config, Block block, std::uint64_t agent_seed)
    : agent_(config, agent_seed), block_(block), seed_(agent_seed) {
  if (block == Block::training) throw std::invalid_argument("AdaptiveBlock: training is not an adaptive block");
}

bool AdaptiveBlock::finished() const {
  return converged().has_value() || agent_.state().t >= agent_.config().max_trials;
}

ActionId AdaptiveBlock::propose() {
  if (pending_) throw std::logic_error("AdaptiveBlock: previous proposal not yet answered");
  if (finished()) throw std::logic_error("AdaptiveBlock: block already finished");
  pending_ = agent_.choose();
  return *pending_;
}

const TrialRecord& AdaptiveBlock::submit(const Reward& reward, std::int64_t wall_time_ms, int session_t) {
  if (!pending_) throw std::logic_error("AdaptiveBlock: submit without a proposal");
  const ActionId a = *pending_;
  const AgentState& before = agent_.state();

  TrialRecord rec;
  rec.t = before.t;
  rec.session_t = session_t;
  rec.block = block_;
  rec.condition = a;
  rec.reward = reward.value;
  AgentSnapshot snap;
  snap.alpha_t = before.alpha_t;
  snap.epsilon_t = before.epsilon_t;

  agent_.learn(a, reward);
  pending_.reset();

  snap.q = agent_.state().q;
  rec.agent = snap;
  rec.converged = agent_.converged();
  rec.wall_time_ms = wall_time_ms;
  log_.push_back(rec);
  return log_.back();
}

namespace {

bool same_bits(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

std::string compare(const TrialRecord& want, const TrialRecord& got) {
  if (want.condition != got.condition) {
    return "condition differs: log " + std::to_string(want.condition.index) + ", replay " +
           std::to_string(got.condition.index);
  }
  if (!want.agent) return "record has no agent snapshot";
  for (std::size_t i = 0; i < want.agent->q.size(); ++i) {
    if (!same_bits(want.agent->q[i], got.agent->q[i])) return "q[" + std::to_string(i) + "] differs";
  }
  if (!same_bits(want.agent->alpha_t, got.agent->alpha_t)) return "alpha differs";
  if (!same_bits(want.agent->epsilon_t, got.agent->epsilon_t)) return "epsilon differs";
  if (want.converged != got.converged) return "convergence flag differs";
  return {};
}

}  // namespace

ReplayReport replay_block(const AgentConfig& config, std::uint64_t agent_seed, std::span<const TrialRecord> records) {
  ReplayReport rep;
  if (records.empty()) return rep;
  AdaptiveBlock blk(config, records.front().block, agent_seed);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const TrialRecord& want = records[i];
    if (blk.finished()) {
      rep.identical = false;
      rep.first_mismatch = i;
      rep.reason = "log continues after the block finished";
      return rep;
    }
    blk.propose();
    const TrialRecord& got = blk.submit(Reward::make(want.reward, RewardSource::explicit_rating), want.wall_time_ms,
                                        want.session_t);
    ++rep.trials_checked;
    if (auto why = compare(want, got); !why.empty()) {
      rep.identical = false;
      rep.first_mismatch = i;
      rep.reason = why;
      return rep;
    }
  }
  return rep;
}

AdaptiveBlock AdaptiveBlock::restore(const AgentConfig& config, Block block, std::uint64_t agent_seed,
                                     std::span<const TrialRecord> records) {
  AdaptiveBlock blk(config, block, agent_seed);
  for (std::size_t i = 0; i < records.size(); ++i) {
    blk.propose();
    const TrialRecord& got =
        blk.submit(Reward::make(records[i].reward, RewardSource::explicit_rating), records[i].wall_time_ms,
                   records[i].session_t);
    if (auto why = compare(records[i], got); !why.empty()) {
      throw std::runtime_error("checkpoint trial " + std::to_string(i) + " does not replay: " + why);
    }
  }
  return blk;
}

std::vector<ActionId> training_order(const ExperimentConfig& config, Rng& rng) {
  std::vector<ActionId> order;
  order.reserve(static_cast<std::size_t>(config.training_trials));
  for (int c = 0; c < kNumActions; ++c) {
    for (int k = 0; k < config.trials_per_condition; ++k) order.push_back(ActionId{c});
  }
  for (std::size_t i = order.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(static_cast<int>(i)));
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

ActionId truth_from_scores(std::span<const ActionId> conditions, std::span<const double> scores) {
  std::array<double, kNumActions> sum{};
  std::array<int, kNumActions> cnt{};
  for (std::size_t i = 0; i < conditions.size(); ++i) {
    sum[static_cast<std::size_t>(conditions[i].index)] += scores[i];
    cnt[static_cast<std::size_t>(conditions[i].index)] += 1;
  }
  ActionId best{0};
  double best_mean = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < kNumActions; ++c) {
    const auto i = static_cast<std::size_t>(c);
    if (cnt[i] == 0) continue;
    const double m = sum[i] / cnt[i];
    if (m > best_mean) {
      best_mean = m;
      best = ActionId{c};
    }
  }
  return best;
}

TrainingBlockResult run_training_block(const ExperimentConfig& config, Rng& order_rng, const TrainingSource& source) {
  const auto order = training_order(config, order_rng);
  std::vector<Epoch> epochs;
  epochs.reserve(order.size());

  TrainingBlockResult res;
  std::vector<double> ratings;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const int t = static_cast<int>(i);
    Epoch e = source(order[i], t, t);
    e.condition = order[i];
    e.trial_id = t;
    ratings.push_back(e.raw_score);

    TrialRecord rec;
    rec.t = t;
    rec.session_t = t;
    rec.block = Block::training;
    rec.condition = order[i];
    rec.reward = e.raw_score;
    rec.wall_time_ms = static_cast<std::int64_t>(t) * config.trial_duration_ms;
    res.log.push_back(rec);
    epochs.push_back(std::move(e));
  }

  PrepOptions prep;
  prep.amplitude_threshold_uv = config.amplitude_threshold_uv;
  prep.tukey_k = config.tukey_k;
  prep.exec = config.decoder.exec;
  res.prepared = prepare_dataset(epochs, prep);
  res.truth = truth_from_scores(order, ratings);

  TrainingSummary& s = res.summary;
  s.n_trials = static_cast<int>(order.size());
  s.n_rejected_amplitude = static_cast<int>(res.prepared.rejected_amplitude.size());
  s.n_rejected_behavior = static_cast<int>(res.prepared.rejected_behavior.size());
  s.n_retained = static_cast<int>(res.prepared.data.size());
  std::tie(s.n_class0, s.n_class1) = res.prepared.data.class_counts();
  s.split_threshold = res.prepared.data.split_threshold;
  std::array<int, kNumActions> cnt{};
  for (std::size_t i = 0; i < order.size(); ++i) {
    s.condition_mean_score[static_cast<std::size_t>(order[i].index)] += ratings[i];
    cnt[static_cast<std::size_t>(order[i].index)] += 1;
  }
  for (std::size_t c = 0; c < cnt.size(); ++c) {
    if (cnt[c] > 0) s.condition_mean_score[c] /= cnt[c];
  }
  return res;
}

TrainingSource simulated_training_source(const ExperimentConfig& config, Rng& rng) {
  return [&config, &rng](ActionId c, int session_t, int trial_id) {
    return synth_training_trial(config.profile, config.erp, c, session_t, trial_id, rng).epoch;
  };
}

std::vector<TrialRecord> run_adaptive_block(const AgentConfig& agent, Block block, std::uint64_t agent_seed,
                                            const FeedbackFn& feedback, int session_t0, int trial_duration_ms) {
  AdaptiveBlock blk(agent, block, agent_seed);
  int session_t = session_t0;
  while (!blk.finished()) {
    const ActionId a = blk.propose();
    const Reward r = feedback(a, session_t);
    blk.submit(r, static_cast<std::int64_t>(session_t) * trial_duration_ms, session_t);
    ++session_t;
  }
  return blk.log();
}

FeedbackFn simulated_explicit_feedback(const PreferenceProfile& profile, Rng& rng) {
  return [&profile, &rng](ActionId c, int t) { return explicit_rating(profile, c, t, rng).reward; };
}

FeedbackFn simulated_implicit_feedback(const DecoderBundle& bundle, const ErpModel& erp,
                                       const PreferenceProfile& profile, Rng& rng) {
  return [&bundle, &erp, &profile, &rng](ActionId c, int t) {
    return implicit_feedback(bundle, erp, profile, c, t, rng).reward;
  };
}

Outcome classify(std::optional<ActionId> converged, std::optional<ActionId> truth) {
  if (!converged) return Outcome::not_converged;
  return truth && *converged == *truth ? Outcome::converged_correct : Outcome::converged_incorrect;
}

BlockOrder resolve_order(BlockOrder order, int run_index) {
  if (order != BlockOrder::counterbalanced) return order;
  return run_index % 2 == 0 ? BlockOrder::explicit_first : BlockOrder::implicit_first;
}

BundleSummary summarize_bundle(const DecoderBundle& b) {
  BundleSummary s;
  s.n_features = static_cast<int>(b.selected_features.size());
  s.shrinkage_lambda = b.shrinkage_lambda;
  s.cv_accuracy = b.cv_accuracy;
  s.cv_f1 = b.cv_f1;
  s.norm_lo = b.norm_lo;
  s.norm_hi = b.norm_hi;
  s.selected_features = b.selected_features;
  return s;
}

SessionResult run_full_session(const ExperimentConfig& config, std::uint64_t seed, int run_index,
                               const SessionOptions& options) {
  config.validate();
  SessionResult res;
  res.seed = seed;
  res.order = resolve_order(config.block_order, run_index);
  res.agent_seed_explicit = derive_seed(seed, "agent/explicit");
  res.agent_seed_implicit = derive_seed(seed, "agent/implicit");

  ExperimentConfig cfg = config;
  cfg.decoder.exec = options.exec;

  Rng order_rng(derive_seed(seed, "training/order"));
  Rng trial_rng(derive_seed(seed, "training/trials"));
  std::vector<Epoch>* keep = options.training_epochs_out;
  TrainingSource source = [&](ActionId c, int session_t, int trial_id) {
    Epoch e = synth_training_trial(cfg.profile, cfg.erp, c, session_t, trial_id, trial_rng).epoch;
    if (keep) keep->push_back(e);
    return e;
  };
  TrainingBlockResult training = run_training_block(cfg, order_rng, source);
  res.training = training.summary;
  res.training_log = std::move(training.log);
  res.truth = training.truth;

  Rng split_rng(derive_seed(seed, "decoder/split"));
  const DecoderBundle bundle = grid_search_fit(training.prepared.data, split_rng, cfg.decoder);
  res.bundle = summarize_bundle(bundle);

  Rng explicit_rng(derive_seed(seed, "oracle/explicit"));
  Rng implicit_rng(derive_seed(seed, "oracle/implicit"));
  const FeedbackFn explicit_fb = simulated_explicit_feedback(cfg.profile, explicit_rng);
  const FeedbackFn implicit_fb = simulated_implicit_feedback(bundle, cfg.erp, cfg.profile, implicit_rng);

  int session_t = cfg.training_trials;
  auto run_block = [&](Block b) {
    const bool is_explicit = b == Block::explicit_feedback;
    auto log = run_adaptive_block(cfg.agent, b, is_explicit ? res.agent_seed_explicit : res.agent_seed_implicit,
                                  is_explicit ? explicit_fb : implicit_fb, session_t, cfg.trial_duration_ms);
    session_t += static_cast<int>(log.size());
    return log;
  };
  if (res.order == BlockOrder::explicit_first) {
    res.explicit_log = run_block(Block::explicit_feedback);
    res.implicit_log = run_block(Block::implicit_feedback);
  } else {
    res.implicit_log = run_block(Block::implicit_feedback);
    res.explicit_log = run_block(Block::explicit_feedback);
  }

  auto finish = [&](const std::vector<TrialRecord>& log, Outcome& outcome, std::optional<int>& steps) {
    const std::optional<ActionId> conv = log.empty() ? std::nullopt : log.back().converged;
    outcome = classify(conv, res.truth);
    if (conv) steps = static_cast<int>(log.size());
  };
  finish(res.explicit_log, res.explicit_outcome, res.steps_explicit);
  finish(res.implicit_log, res.implicit_outcome, res.steps_implicit);
  return res;
}

}  // namespace neuroadapt
