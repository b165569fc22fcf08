#pragma once

#include "neuroadapt/bandit.hpp"
#include "neuroadapt/config.hpp"
#include "neuroadapt/decoder.hpp"
#include "neuroadapt/human_sim.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace neuroadapt {

enum class Block { training, explicit_feedback, implicit_feedback };
std::string_view block_name(Block b);
Block parse_block(std::string_view s);

enum class Outcome { converged_correct, converged_incorrect, not_converged };
std::string_view outcome_name(Outcome o);
Outcome parse_outcome(std::string_view s);

struct AgentSnapshot {
  std::array<double, kNumActions> q{};  // after this trial's update
  double alpha_t{0.0};                  // rates in effect for this trial
  double epsilon_t{0.0};
};

struct TrialRecord {
  int t{0};          // index within the block
  int session_t{0};  // time on task across the whole session
  Block block{Block::training};
  ActionId condition{};
  double reward{0.0};
  std::optional<AgentSnapshot> agent;  // adaptive blocks only
  std::optional<ActionId> converged;
  std::int64_t wall_time_ms{0};
};

// One adaptive block: the agent proposes, feedback arrives, the agent
// learns, a record is appended, until convergence or max_trials. Shared by
// the simulator loop and the live console server.
class AdaptiveBlock {
 public:
  AdaptiveBlock(const AgentConfig& config, Block block, std::uint64_t agent_seed);

  bool finished() const;
  // Selects the next condition (consumes the agent's random draws). Must be
  // followed by exactly one submit().
  ActionId propose();
  const TrialRecord& submit(const Reward& reward, std::int64_t wall_time_ms, int session_t);

  std::optional<ActionId> converged() const { return agent_.converged(); }
  std::optional<ActionId> pending() const { return pending_; }
  const Agent& agent() const { return agent_; }
  const std::vector<TrialRecord>& log() const { return log_; }
  Block block() const { return block_; }
  std::uint64_t seed() const { return seed_; }

  // Rebuilds a block from its recorded trials. Throws std::runtime_error if
  // the records are not reproduced exactly.
  static AdaptiveBlock restore(const AgentConfig& config, Block block, std::uint64_t agent_seed,
                               std::span<const TrialRecord> records);

 private:
  Agent agent_;
  Block block_;
  std::uint64_t seed_;
  std::optional<ActionId> pending_;
  std::vector<TrialRecord> log_;
};

struct ReplayReport {
  bool identical{true};
  std::size_t trials_checked{0};
  std::optional<std::size_t> first_mismatch;
  std::string reason;
};

// Re-runs the agent over the recorded rewards and compares decisions,
// rates and Q snapshots bit for bit.
ReplayReport replay_block(const AgentConfig& config, std::uint64_t agent_seed, std::span<const TrialRecord> records);

struct TrainingSummary {
  int n_trials{0};
  int n_rejected_amplitude{0};
  int n_rejected_behavior{0};
  int n_retained{0};
  int n_class0{0};
  int n_class1{0};
  double split_threshold{0.0};
  std::array<double, kNumActions> condition_mean_score{};
};

struct BundleSummary {
  int n_features{0};
  double shrinkage_lambda{0.0};
  double cv_accuracy{0.0};
  double cv_f1{0.0};
  double norm_lo{0.0};
  double norm_hi{0.0};
  std::vector<FeatureIndex> selected_features;
};

struct TrainingBlockResult {
  PreparedDataset prepared;
  std::vector<TrialRecord> log;
  TrainingSummary summary;
  ActionId truth{};
};

// Supplies one training trial (epoch with raw_score, optional
// placement_error) for a condition at session time t.
using TrainingSource = std::function<Epoch(ActionId condition, int session_t, int trial_id)>;

// Seeded permutation of trials_per_condition x 4 conditions.
std::vector<ActionId> training_order(const ExperimentConfig& config, Rng& rng);

// Runs the training block through `source`, then amplitude and Tukey
// rejection and the median split.
TrainingBlockResult run_training_block(const ExperimentConfig& config, Rng& order_rng, const TrainingSource& source);

// Simulated participant: synth_training_trial driven by config.profile/erp.
TrainingSource simulated_training_source(const ExperimentConfig& config, Rng& rng);

// Condition with the highest mean score (lowest index on ties).
ActionId truth_from_scores(std::span<const ActionId> conditions, std::span<const double> scores);

using FeedbackFn = std::function<Reward(ActionId condition, int session_t)>;

std::vector<TrialRecord> run_adaptive_block(const AgentConfig& agent, Block block, std::uint64_t agent_seed,
                                            const FeedbackFn& feedback, int session_t0, int trial_duration_ms);

// Simulated feedback channels.
FeedbackFn simulated_explicit_feedback(const PreferenceProfile& profile, Rng& rng);
FeedbackFn simulated_implicit_feedback(const DecoderBundle& bundle, const ErpModel& erp,
                                       const PreferenceProfile& profile, Rng& rng);

Outcome classify(std::optional<ActionId> converged, std::optional<ActionId> truth);

struct SessionResult {
  std::uint64_t seed{0};
  BlockOrder order{BlockOrder::explicit_first};  // resolved, never counterbalanced
  std::uint64_t agent_seed_explicit{0};
  std::uint64_t agent_seed_implicit{0};
  TrainingSummary training;
  BundleSummary bundle;
  std::vector<TrialRecord> training_log;
  std::vector<TrialRecord> explicit_log;
  std::vector<TrialRecord> implicit_log;
  ActionId truth{};
  Outcome explicit_outcome{Outcome::not_converged};
  Outcome implicit_outcome{Outcome::not_converged};
  std::optional<int> steps_explicit;
  std::optional<int> steps_implicit;
};

// Counterbalanced configs alternate by run index (even: explicit first).
BlockOrder resolve_order(BlockOrder order, int run_index);

struct SessionOptions {
  Execution exec{Execution::parallel};
  // Keeps the raw training epochs (for dataset export).
  std::vector<Epoch>* training_epochs_out{nullptr};
};

// Training block -> decoder fit -> both adaptive blocks -> outcomes.
SessionResult run_full_session(const ExperimentConfig& config, std::uint64_t seed, int run_index = 0,
                               const SessionOptions& options = {});

BundleSummary summarize_bundle(const DecoderBundle& b);

}  // namespace neuroadapt
