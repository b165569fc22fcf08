#include "neuroadapt/bandit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace neuroadapt {

namespace {

constexpr std::array<std::string_view, kNumActions> kConditionNames = {
    "visual", "visual+sound", "visual+vibrotactile", "visual+sound+vibrotactile"};

double decayed(int t, double x0, double x_min, double divisor, DecayMode mode) {
  if (t < 0) throw std::invalid_argument("schedule: t must be >= 0");
  double drop = 0.0;
  if (mode == DecayMode::per_step) {
    drop = std::log10(static_cast<double>(t) + 1.0);
  } else {
    for (int k = 0; k <= t; ++k) drop += std::log10(static_cast<double>(k) + 1.0);
  }
  return std::max(x_min, x0 - drop / divisor);
}

void require(bool ok, const char* field, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("agent.") + field + ": " + what);
}

}  // namespace

bool is_valid(ActionId a) { return a.index >= 0 && a.index < kNumActions; }

std::string_view condition_name(ActionId a) {
  if (!is_valid(a)) throw std::invalid_argument("condition index out of range");
  return kConditionNames[static_cast<std::size_t>(a.index)];
}

ActionId parse_condition(std::string_view name) {
  for (int i = 0; i < kNumActions; ++i) {
    if (kConditionNames[static_cast<std::size_t>(i)] == name) return ActionId{i};
  }
  throw std::invalid_argument("unknown condition '" + std::string(name) + "'");
}

ConditionProxies condition_proxies(ActionId a) {
  if (!is_valid(a)) throw std::invalid_argument("condition index out of range");
  return {true, a.index == 1 || a.index == 3, a.index == 2 || a.index == 3};
}

Reward Reward::make(double raw, RewardSource source) {
  if (!std::isfinite(raw)) throw std::invalid_argument("reward is not finite");
  return {std::clamp(raw, 0.0, 1.0), source};
}

std::string_view decay_mode_name(DecayMode m) {
  return m == DecayMode::per_step ? "per_step" : "cumulative";
}

DecayMode parse_decay_mode(std::string_view s) {
  if (s == "per_step") return DecayMode::per_step;
  if (s == "cumulative") return DecayMode::cumulative;
  throw std::invalid_argument("agent.decay: expected 'per_step' or 'cumulative', got '" +
                              std::string(s) + "'");
}

void AgentConfig::validate() const {
  require(num_actions == kNumActions, "num_actions", "must be 4");
  require(std::isfinite(c) && c >= 0.0, "c", "must be >= 0");
  require(alpha_min >= 0.0 && alpha_min <= alpha0 && alpha0 <= 1.0, "alpha0",
          "need 0 <= alpha_min <= alpha0 <= 1");
  require(epsilon_min >= 0.0 && epsilon_min <= epsilon0 && epsilon0 <= 1.0, "epsilon0",
          "need 0 <= epsilon_min <= epsilon0 <= 1");
  require(gamma >= 0.0 && gamma <= 1.0, "gamma", "must be in [0, 1]");
  require(std::isfinite(q_init), "q_init", "must be finite");
  require(convergence_k >= 1, "convergence_k", "must be >= 1");
  require(max_trials >= 0, "max_trials", "must be >= 0");
}

AgentState AgentState::initial(const AgentConfig& config) {
  AgentState s;
  s.q.fill(config.q_init);
  s.n.fill(0);
  s.alpha_t = alpha_schedule(0, config);
  s.epsilon_t = epsilon_schedule(0, config);
  return s;
}

double alpha_schedule(int t, const AgentConfig& config) {
  return decayed(t, config.alpha0, config.alpha_min, 40.0, config.decay);
}

double epsilon_schedule(int t, const AgentConfig& config) {
  return decayed(t, config.epsilon0, config.epsilon_min, 20.0, config.decay);
}

double ucb_value(const AgentState& state, ActionId a, const AgentConfig& config, int t) {
  const int visits = state.n[static_cast<std::size_t>(a.index)];
  if (visits == 0) return std::numeric_limits<double>::infinity();
  return state.q[static_cast<std::size_t>(a.index)] +
         config.c * std::sqrt(std::log10(static_cast<double>(t)) / visits);
}

ActionId greedy_action(const AgentState& state, const AgentConfig& config) {
  const int t = decision_index(state);
  ActionId best{0};
  double best_value = ucb_value(state, best, config, t);
  for (int i = 1; i < kNumActions; ++i) {
    const double v = ucb_value(state, ActionId{i}, config, t);
    if (v > best_value) {
      best_value = v;
      best = ActionId{i};
    }
  }
  return best;
}

ActionId select_action(const AgentState& state, const AgentConfig& config, Rng& rng) {
  const double explore_draw = rng.uniform();
  const double arm_draw = rng.uniform();
  if (explore_draw < state.epsilon_t) {
    const int k = static_cast<int>(arm_draw * kNumActions);
    return ActionId{std::min(k, kNumActions - 1)};
  }
  return greedy_action(state, config);
}

AgentState update_q(const AgentState& state, ActionId a, const Reward& r, const AgentConfig& config) {
  if (!is_valid(a)) throw std::invalid_argument("update_q: invalid action");
  if (!std::isfinite(r.value)) throw std::invalid_argument("update_q: reward is not finite");

  AgentState next = state;
  const double q_max = *std::max_element(state.q.begin(), state.q.end());
  const double alpha = state.alpha_t;
  auto& qa = next.q[static_cast<std::size_t>(a.index)];
  qa = (1.0 - alpha) * qa + alpha * (r.value - config.gamma * q_max);

  next.n[static_cast<std::size_t>(a.index)] += 1;
  next.t += 1;
  next.pick_history.push_back(a);
  next.alpha_t = alpha_schedule(next.t, config);
  next.epsilon_t = epsilon_schedule(next.t, config);
  return next;
}

std::optional<ActionId> check_convergence(const AgentState& state, const AgentConfig& config) {
  const auto& h = state.pick_history;
  const auto k = static_cast<std::size_t>(config.convergence_k);
  if (h.size() < k) return std::nullopt;
  const ActionId last = h.back();
  for (std::size_t i = h.size() - k; i < h.size(); ++i) {
    if (h[i] != last) return std::nullopt;
  }
  return last;
}

Agent::Agent(AgentConfig config, std::uint64_t seed)
    : config_(config), state_(AgentState::initial(config)), rng_(seed) {
  config_.validate();
}

}  // namespace neuroadapt
