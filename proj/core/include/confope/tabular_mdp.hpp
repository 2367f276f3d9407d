#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "confope/ndarray.hpp"

namespace confope {

/// Absolute tolerance for every "sums to one" / "is nonnegative" check.
inline constexpr double kProbabilityTol = 1e-12;

/// Throws ValidationError if `row` is not a probability vector within
/// kProbabilityTol. `what` names the row in the message.
void check_distribution(std::span<const double> row, const char* what);

/**
 * Finite MDP (X, A, P, R, chi, gamma) with deterministic rewards R(x,a,x').
 *
 * Transitions and rewards are stored as [x][a][x'] tensors. The object is
 * immutable after construction; the constructor rejects rows that are not
 * distributions instead of renormalizing them. Terminal states are ordinary
 * absorbing states with zero reward.
 */
class TabularMDP {
 public:
  TabularMDP(Tensor3 transitions, Tensor3 rewards, std::vector<double> initial_dist,
             double discount);

  std::size_t n_states() const { return transitions_.extent(0); }
  std::size_t n_actions() const { return transitions_.extent(1); }
  double discount() const { return discount_; }

  const Tensor3& transitions() const { return transitions_; }
  const Tensor3& rewards() const { return rewards_; }
  const std::vector<double>& initial_dist() const { return initial_; }

  std::span<const double> transition_row(std::size_t x, std::size_t a) const {
    return transitions_.row(x, a);
  }
  double reward(std::size_t x, std::size_t a, std::size_t next) const {
    return rewards_(x, a, next);
  }

  /// Expected one-step reward sum_{x'} P(x'|x,a) R(x,a,x').
  double expected_reward(std::size_t x, std::size_t a) const;

 private:
  Tensor3 transitions_;
  Tensor3 rewards_;
  std::vector<double> initial_;
  double discount_;
};

/// Stationary randomized policy pi(a|x), rows validated as distributions.
class PolicyTable {
 public:
  explicit PolicyTable(Matrix probs);

  /// Uniform policy over `n_actions` in every state.
  static PolicyTable uniform(std::size_t n_states, std::size_t n_actions);

  std::size_t n_states() const { return probs_.extent(0); }
  std::size_t n_actions() const { return probs_.extent(1); }
  const Matrix& probs() const { return probs_; }
  std::span<const double> row(std::size_t x) const { return probs_.row(x); }
  double operator()(std::size_t x, std::size_t a) const { return probs_(x, a); }

 private:
  Matrix probs_;
};

/// State values V_T(x) at horizon T.
struct StateValues {
  std::vector<double> v;
  std::size_t horizon = 0;
};

/// State-action values Q_T(x,a) at horizon T.
struct ActionValues {
  Matrix q;
  std::size_t horizon = 0;
};

struct PolicyEvaluation {
  ActionValues q;
  StateValues v;
  double expected_value = 0.0;
};

/// Q(x,a) = sum_{x'} P(x'|x,a) (R(x,a,x') + gamma v_prev(x')); horizon + 1.
ActionValues bellman_apply(const TabularMDP& mdp, const StateValues& v_prev);

/// Evaluation operator on state-action tables:
/// (T^pi g)(x,a) = E[R + gamma g(x', pi) | x, a].
ActionValues bellman_apply(const TabularMDP& mdp, const PolicyTable& policy,
                           const ActionValues& q_prev);

/// V(x) = sum_a pi(a|x) Q(x,a).
StateValues state_values(const ActionValues& q, const PolicyTable& policy);

/// chi . v
double expected_under(std::span<const double> initial, std::span<const double> v);

/// Exact finite-horizon evaluation: T applications of the Bellman operator
/// starting from zero. T = 0 yields identically zero values.
PolicyEvaluation policy_value(const TabularMDP& mdp, const PolicyTable& policy,
                              std::size_t horizon);

/// Finite-horizon optimal values V*_T by backward induction.
StateValues optimal_values(const TabularMDP& mdp, std::size_t horizon);

/// Optimal Q*_T(x,a) (one Bellman step on V*_{T-1}).
ActionValues optimal_action_values(const TabularMDP& mdp, std::size_t horizon);

void check_same_shape(const TabularMDP& mdp, const PolicyTable& policy);

}  // namespace confope
