#include "confope/tabular_mdp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "confope/error.hpp"

namespace confope {

void check_distribution(std::span<const double> row, const char* what) {
  double sum = 0.0;
  for (double p : row) {
    if (!std::isfinite(p) || p < -kProbabilityTol || p > 1.0 + kProbabilityTol) {
      throw ValidationError(std::string(what) + ": entry " + std::to_string(p) +
                            " outside [0,1]");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kProbabilityTol) {
    throw ValidationError(std::string(what) + ": sums to " + std::to_string(sum));
  }
}

TabularMDP::TabularMDP(Tensor3 transitions, Tensor3 rewards,
                       std::vector<double> initial_dist, double discount)
    : transitions_(std::move(transitions)),
      rewards_(std::move(rewards)),
      initial_(std::move(initial_dist)),
      discount_(discount) {
  const auto& shape = transitions_.shape();
  if (shape[0] == 0 || shape[1] == 0) {
    throw DimensionError("TabularMDP: need at least one state and one action");
  }
  if (shape[2] != shape[0]) {
    throw DimensionError("TabularMDP: transitions must be [X][A][X]");
  }
  if (rewards_.shape() != shape) {
    throw DimensionError("TabularMDP: rewards shape differs from transitions");
  }
  if (initial_.size() != shape[0]) {
    throw DimensionError("TabularMDP: initial distribution has wrong length");
  }
  if (!(discount_ >= 0.0 && discount_ <= 1.0)) {
    throw ValidationError("TabularMDP: discount must lie in [0,1]");
  }
  for (std::size_t x = 0; x < shape[0]; ++x) {
    for (std::size_t a = 0; a < shape[1]; ++a) {
      check_distribution(transitions_.row(x, a), "TabularMDP transition row");
    }
  }
  check_distribution(initial_, "TabularMDP initial distribution");
  for (double r : rewards_.flat()) {
    if (!std::isfinite(r)) throw ValidationError("TabularMDP: non-finite reward");
  }
}

double TabularMDP::expected_reward(std::size_t x, std::size_t a) const {
  auto p = transition_row(x, a);
  auto r = rewards_.row(x, a);
  double acc = 0.0;
  for (std::size_t y = 0; y < p.size(); ++y) acc += p[y] * r[y];
  return acc;
}

PolicyTable::PolicyTable(Matrix probs) : probs_(std::move(probs)) {
  if (probs_.extent(0) == 0 || probs_.extent(1) == 0) {
    throw DimensionError("PolicyTable: empty table");
  }
  for (std::size_t x = 0; x < probs_.extent(0); ++x) {
    check_distribution(probs_.row(x), "PolicyTable row");
  }
}

PolicyTable PolicyTable::uniform(std::size_t n_states, std::size_t n_actions) {
  return PolicyTable(Matrix({n_states, n_actions}, 1.0 / static_cast<double>(n_actions)));
}

void check_same_shape(const TabularMDP& mdp, const PolicyTable& policy) {
  if (policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions()) {
    throw DimensionError("policy shape does not match the MDP");
  }
}

ActionValues bellman_apply(const TabularMDP& mdp, const StateValues& v_prev) {
  const std::size_t nx = mdp.n_states();
  const std::size_t na = mdp.n_actions();
  if (v_prev.v.size() != nx) {
    throw DimensionError("bellman_apply: value table has wrong number of states");
  }
  ActionValues out{Matrix({nx, na}), v_prev.horizon + 1};
  const double gamma = mdp.discount();
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t a = 0; a < na; ++a) {
      auto p = mdp.transition_row(x, a);
      auto r = mdp.rewards().row(x, a);
      double acc = 0.0;
      for (std::size_t y = 0; y < nx; ++y) {
        if (p[y] != 0.0) acc += p[y] * (r[y] + gamma * v_prev.v[y]);
      }
      out.q(x, a) = acc;
    }
  }
  return out;
}

StateValues state_values(const ActionValues& q, const PolicyTable& policy) {
  if (q.q.extent(0) != policy.n_states() || q.q.extent(1) != policy.n_actions()) {
    throw DimensionError("state_values: Q table and policy disagree");
  }
  StateValues out{std::vector<double>(policy.n_states(), 0.0), q.horizon};
  for (std::size_t x = 0; x < policy.n_states(); ++x) {
    double acc = 0.0;
    for (std::size_t a = 0; a < policy.n_actions(); ++a) acc += policy(x, a) * q.q(x, a);
    out.v[x] = acc;
  }
  return out;
}

ActionValues bellman_apply(const TabularMDP& mdp, const PolicyTable& policy,
                           const ActionValues& q_prev) {
  check_same_shape(mdp, policy);
  return bellman_apply(mdp, state_values(q_prev, policy));
}

double expected_under(std::span<const double> initial, std::span<const double> v) {
  if (initial.size() != v.size()) {
    throw DimensionError("expected_under: length mismatch");
  }
  double acc = 0.0;
  for (std::size_t x = 0; x < v.size(); ++x) acc += initial[x] * v[x];
  return acc;
}

PolicyEvaluation policy_value(const TabularMDP& mdp, const PolicyTable& policy,
                              std::size_t horizon) {
  check_same_shape(mdp, policy);
  PolicyEvaluation ev;
  ev.q = ActionValues{Matrix({mdp.n_states(), mdp.n_actions()}), 0};
  ev.v = StateValues{std::vector<double>(mdp.n_states(), 0.0), 0};
  for (std::size_t k = 0; k < horizon; ++k) {
    ev.q = bellman_apply(mdp, ev.v);
    ev.v = state_values(ev.q, policy);
  }
  ev.expected_value = expected_under(mdp.initial_dist(), ev.v.v);
  return ev;
}

ActionValues optimal_action_values(const TabularMDP& mdp, std::size_t horizon) {
  StateValues v{std::vector<double>(mdp.n_states(), 0.0), 0};
  ActionValues q{Matrix({mdp.n_states(), mdp.n_actions()}), 0};
  for (std::size_t k = 0; k < horizon; ++k) {
    q = bellman_apply(mdp, v);
    for (std::size_t x = 0; x < mdp.n_states(); ++x) {
      auto row = q.q.row(x);
      v.v[x] = *std::max_element(row.begin(), row.end());
    }
    v.horizon = q.horizon;
  }
  return q;
}

StateValues optimal_values(const TabularMDP& mdp, std::size_t horizon) {
  if (horizon == 0) return StateValues{std::vector<double>(mdp.n_states(), 0.0), 0};
  ActionValues q = optimal_action_values(mdp, horizon);
  StateValues v{std::vector<double>(mdp.n_states(), 0.0), horizon};
  for (std::size_t x = 0; x < mdp.n_states(); ++x) {
    auto row = q.q.row(x);
    v.v[x] = *std::max_element(row.begin(), row.end());
  }
  return v;
}

}  // namespace confope
