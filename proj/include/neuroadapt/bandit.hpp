#pragma once

#include "neuroadapt/rng.hpp"

#include <array>
#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace neuroadapt {

// Four-armed bandit over the multisensory interface conditions.
//
// Action selection is a hybrid policy: with probability eps(t) a uniform
// random arm, otherwise argmax over
//
//   UCB(a) = Q(a) + c * sqrt(log10(t) / N(a)),   UCB(a) = +inf if N(a) = 0
//
// and the value update is anchored on the current best estimate:
//
//   Q(a) <- (1 - alpha) Q(a) + alpha (r - gamma * max_a' Q(a'))
//
// Both rates decay logarithmically with the trial counter (see DecayMode).

inline constexpr int kNumActions = 4;

// Index into the fixed condition table:
//   0 visual, 1 visual+sound, 2 visual+vibrotactile, 3 visual+sound+vibrotactile
struct ActionId {
  int index{0};

  constexpr ActionId() = default;
  constexpr explicit ActionId(int i) : index(i) {}

  constexpr auto operator<=>(const ActionId&) const = default;
};

bool is_valid(ActionId a);
std::string_view condition_name(ActionId a);
ActionId parse_condition(std::string_view name);

// Stimulus components rendered for a condition (visual colour change is
// always present).
struct ConditionProxies {
  bool color{true};
  bool sound{false};
  bool vibration{false};
};
ConditionProxies condition_proxies(ActionId a);

enum class RewardSource { explicit_rating, implicit_decoder };

struct Reward {
  double value{0.0};
  RewardSource source{RewardSource::explicit_rating};

  // Boundary constructor: rejects non-finite input, clamps to [0, 1].
  static Reward make(double raw, RewardSource source);
};

// How alpha(t) and epsilon(t) evolve.
//  per_step:   x(t) = max(x_min, x0 - log10(t + 1) / k)
//  cumulative: the same decrement applied once per trial, i.e.
//              x(t) = max(x_min, x(t-1) - log10(t + 1) / k)
//                   = max(x_min, x0 - log10((t + 1)!) / k)
// with k = 40 for alpha and k = 20 for epsilon.
enum class DecayMode { per_step, cumulative };

std::string_view decay_mode_name(DecayMode m);
DecayMode parse_decay_mode(std::string_view s);

struct AgentConfig {
  int num_actions{kNumActions};
  double c{0.25};
  double alpha0{0.5};
  double alpha_min{0.001};
  double epsilon0{1.0};
  double epsilon_min{0.01};
  double gamma{0.95};
  double q_init{1.0};
  int convergence_k{5};
  int max_trials{60};
  DecayMode decay{DecayMode::cumulative};

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct AgentState {
  std::array<double, kNumActions> q{};
  std::array<int, kNumActions> n{};
  int t{0};  // completed updates
  std::vector<ActionId> pick_history;
  double alpha_t{0.0};
  double epsilon_t{0.0};

  static AgentState initial(const AgentConfig& config);
};

double alpha_schedule(int t, const AgentConfig& config);
double epsilon_schedule(int t, const AgentConfig& config);

// UCB decision index: number of completed updates + 1, so log10 is defined
// on the first decision.
inline int decision_index(const AgentState& state) { return state.t + 1; }

// +inf when N(a) = 0. `t` is the decision index.
double ucb_value(const AgentState& state, ActionId a, const AgentConfig& config, int t);
inline double ucb_value(const AgentState& state, ActionId a, const AgentConfig& config) {
  return ucb_value(state, a, config, decision_index(state));
}

// Argmax of UCB with ties broken toward the lowest index.
ActionId greedy_action(const AgentState& state, const AgentConfig& config);

// Consumes exactly two uniforms per call: the explore/exploit draw first,
// then the arm draw (used only when exploring).
ActionId select_action(const AgentState& state, const AgentConfig& config, Rng& rng);

// Returns the successor state. Throws std::invalid_argument on a
// non-finite reward or invalid action.
AgentState update_q(const AgentState& state, ActionId a, const Reward& r, const AgentConfig& config);

// The action repeated over the last convergence_k picks, if any.
std::optional<ActionId> check_convergence(const AgentState& state, const AgentConfig& config);

// Convenience owner of config + state + random source for one block.
class Agent {
 public:
  Agent(AgentConfig config, std::uint64_t seed);

  ActionId choose() { return select_action(state_, config_, rng_); }
  void learn(ActionId a, const Reward& r) { state_ = update_q(state_, a, r, config_); }
  std::optional<ActionId> converged() const { return check_convergence(state_, config_); }

  const AgentState& state() const { return state_; }
  const AgentConfig& config() const { return config_; }

 private:
  AgentConfig config_;
  AgentState state_;
  Rng rng_;
};

}  // namespace neuroadapt
