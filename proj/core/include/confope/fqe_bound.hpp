#pragma once

#include <cstddef>
#include <vector>

#include "confope/dataset.hpp"
#include "confope/sensitivity.hpp"
#include "confope/tabular_mdp.hpp"

namespace confope {

/// Everything the bounds consume: the observed marginal model, the known
/// reward function, chi, gamma and the evaluation policy.
struct EvaluationProblem {
  EmpiricalModel model;
  Tensor3 rewards;
  std::vector<double> initial;
  double discount = 1.0;
  PolicyTable pi_e;

  std::size_t n_states() const { return model.n_states(); }
  std::size_t n_actions() const { return model.n_actions(); }

  /// Throws DimensionError if the pieces disagree on |X| or |A|.
  void validate() const;

  /// y(x') = R(x,a,x') + gamma v(x').
  double continuation(std::size_t x, std::size_t a, std::size_t next,
                      const std::vector<double>& v) const {
    return rewards(x, a, next) + discount * v[next];
  }

  /// Pessimistic value for a pair with no data: min_{x'} R(x,a,x') + gamma v(x').
  double unsupported_value(std::size_t x, std::size_t a, const std::vector<double>& v) const;
};

struct BoundDiagnostics {
  /// Number of (iteration, x, a) evaluations that used the off-support fallback.
  std::size_t unsupported_fallbacks = 0;
  /// Number of LPs reported infeasible (never expected).
  std::size_t lp_infeasible = 0;
  /// Largest spread between restart values in the robust outer search.
  double restart_dispersion = 0.0;
  /// Number of inner LP evaluations.
  std::size_t inner_evaluations = 0;
};

struct FqeBoundResult {
  ActionValues q_lower;
  StateValues v_lower;
  double expected_lower = 0.0;
  /// chi . V_k for k = 0..T.
  std::vector<double> expected_by_horizon;
  BoundDiagnostics diagnostics;
};

/// Tabular fitted-Q evaluation on (P_hat, R): exact regression, no confounding
/// adjustment.
FqeBoundResult nominal_fqe(const EvaluationProblem& problem, std::size_t horizon);

/// One step of the closed-form bound that weights negative targets by beta and
/// nonnegative ones by alpha.
ActionValues naive_bound_step(const EvaluationProblem& problem, double gamma,
                              const ActionValues& q_prev);

FqeBoundResult naive_bound(const EvaluationProblem& problem, double gamma,
                           std::size_t horizon);

/**
 * Confounded FQE lower bound.
 *
 * For every supported (x, a) and iteration k, solves
 *   min_w  sum_{x'} P_hat(x'|x,a) y(x') w(x')
 *   s.t.   alpha(x,a) <= w(x') <= beta(x,a),  sum_{x'} P_hat(x'|x,a) w(x') = 1
 * over successors with P_hat > 0, where y = R + gamma V_{k-1} and V_{k-1} is
 * the previous lower bound mixed through pi_e. Only params.gamma is used.
 */
FqeBoundResult confounded_fqe(const EvaluationProblem& problem,
                              const SensitivityParams& params, std::size_t horizon);

/// Value of the observed behavior policy pi_hat under P_hat (identified).
double behavior_value(const EvaluationProblem& problem, std::size_t horizon);

}  // namespace confope
