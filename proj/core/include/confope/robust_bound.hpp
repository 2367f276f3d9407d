#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "confope/confounded_model.hpp"
#include "confope/fqe_bound.hpp"
#include "confope/ndarray.hpp"
#include "confope/sensitivity.hpp"

namespace confope {

/**
 * The per-state worst case of the s-rectangular robust model.
 *
 * Unknowns are pi_b(.|x,u) and P(.|x,u,a) for u in {0, 1}. Feasible points
 * satisfy the policy box (Gamma), the transition box (Delta), p(u = 1) = p and
 * the observable implications against (pi_hat, p_hat). The objective is
 * sum_a pi_e(a|x) sum_{x'} [sum_u p(u) P(x'|x,u,a)] y_a(x').
 */
struct StateUncertaintyProblem {
  std::vector<double> pi_hat;   // [A]
  Matrix p_hat;                 // [A][X]
  std::vector<bool> supported;  // [A]
  Matrix continuation;          // [A][X], y_a(x') = R(x,a,x') + gamma V(x')
  std::vector<double> pi_e;     // [A]
  SensitivityParams params;

  std::size_t n_actions() const { return pi_hat.size(); }
  std::size_t n_states() const { return p_hat.extent(1); }
};

struct StateSolution {
  double value = 0.0;
  Matrix behavior_u;      // [U][A], pi_b(a|x,u)
  Tensor3 transitions_u;  // [U][A][X], P(x'|x,u,a)
  double restart_dispersion = 0.0;
  std::size_t evaluations = 0;
};

/**
 * Solves one state's bilinear problem.
 *
 * The observable implications make the u = 1 unknowns affine in the u = 0
 * ones, so for fixed pi_b(.|x,0) the problem splits into one box-plus-budget
 * LP per action. The remaining search over pi_b(.|x,0) is separable across
 * actions with a single simplex coupling; it is seeded by a grid dynamic
 * program, the nominal point and the vertices of the feasible polytope, then
 * refined by pairwise line searches. The search is not certified globally
 * optimal; tightness_check() and the grid oracle in the tests are the
 * certification path.
 */
StateSolution solve_state(const StateUncertaintyProblem& problem);

/// Evaluates the per-state objective at a given pi_b(.|x,0); +inf if the
/// point is infeasible. Exposed for tests and diagnostics.
double state_objective_at(const StateUncertaintyProblem& problem,
                          const std::vector<double>& behavior_u0);

struct RobustBoundResult {
  StateValues v_lower;
  double expected_lower = 0.0;
  /// chi . V_k for k = 0..T (single_step_bound fills only k = 0 and k = T).
  std::vector<double> expected_by_horizon;
  BoundDiagnostics diagnostics;
};

struct RobustRun {
  RobustBoundResult bound;
  /// Full-information model assembled from the final iteration's minimizers.
  ConfoundedMDP candidate;
};

/// V_0 = 0, V_k(x) = solve_state(x) with continuation V_{k-1}.
RobustRun robust_value_iteration(const EvaluationProblem& problem,
                                 const SensitivityParams& params, std::size_t horizon);

/// T - 1 nominal Bellman steps on (P_hat, R), then one robust sweep.
RobustBoundResult single_step_bound(const EvaluationProblem& problem,
                                    const SensitivityParams& params, std::size_t horizon);

/// Lists every way `candidate` fails to be consistent with the observed model
/// under `params` (observable implications, Gamma, Delta, support, p).
std::vector<std::string> candidate_violations(const EvaluationProblem& problem,
                                              const SensitivityParams& params,
                                              const ConfoundedMDP& candidate,
                                              double tol = 1e-8);

struct TightnessReport {
  double candidate_value = 0.0;
  double bound = 0.0;
  double gap = 0.0;  // candidate_value - bound
};

/// Value of pi_e in the candidate minus the bound. Throws ValidationError
/// listing the violated constraints if the candidate is invalid.
TightnessReport tightness_check(const EvaluationProblem& problem,
                                const SensitivityParams& params, std::size_t horizon,
                                const ConfoundedMDP& candidate, double bound);

}  // namespace confope
