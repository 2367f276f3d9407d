#include "confope/fqe_bound.hpp"

#include <algorithm>
#include <limits>

#include "confope/error.hpp"
#include "confope/lp.hpp"

namespace confope {

namespace {

std::vector<double> mix(const ActionValues& q, const PolicyTable& pi) {
  return state_values(q, pi).v;
}

/// Runs T iterations of `step`, which maps the previous state values to the
/// next action values, and collects the per-horizon expectations.
template <typename Step>
FqeBoundResult iterate(const EvaluationProblem& problem, std::size_t horizon, Step step) {
  problem.validate();
  const std::size_t nx = problem.n_states();
  const std::size_t na = problem.n_actions();
  FqeBoundResult res;
  res.q_lower = ActionValues{Matrix({nx, na}), 0};
  res.v_lower = StateValues{std::vector<double>(nx, 0.0), 0};
  res.expected_by_horizon.push_back(0.0);
  for (std::size_t k = 1; k <= horizon; ++k) {
    res.q_lower.q = step(res.v_lower.v, res.diagnostics);
    res.q_lower.horizon = k;
    res.v_lower = StateValues{mix(res.q_lower, problem.pi_e), k};
    res.expected_by_horizon.push_back(expected_under(problem.initial, res.v_lower.v));
  }
  res.expected_lower = res.expected_by_horizon.back();
  return res;
}

}  // namespace

void EvaluationProblem::validate() const {
  const std::size_t nx = n_states();
  const std::size_t na = n_actions();
  if (model.p_hat.shape() != Tensor3::Shape{nx, na, nx} ||
      rewards.shape() != Tensor3::Shape{nx, na, nx} || initial.size() != nx ||
      pi_e.n_states() != nx || pi_e.n_actions() != na || model.supported.size() != nx * na) {
    throw DimensionError("EvaluationProblem: inconsistent state/action dimensions");
  }
}

double EvaluationProblem::unsupported_value(std::size_t x, std::size_t a,
                                            const std::vector<double>& v) const {
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t y = 0; y < n_states(); ++y) worst = std::min(worst, continuation(x, a, y, v));
  return worst;
}

FqeBoundResult nominal_fqe(const EvaluationProblem& problem, std::size_t horizon) {
  return iterate(problem, horizon, [&](const std::vector<double>& v, BoundDiagnostics& diag) {
    const std::size_t nx = problem.n_states();
    const std::size_t na = problem.n_actions();
    Matrix q({nx, na});
    for (std::size_t x = 0; x < nx; ++x) {
      for (std::size_t a = 0; a < na; ++a) {
        if (!problem.model.is_supported(x, a)) {
          if (problem.pi_e(x, a) > 0.0) ++diag.unsupported_fallbacks;
          q(x, a) = problem.unsupported_value(x, a, v);
          continue;
        }
        double acc = 0.0;
        for (std::size_t y = 0; y < nx; ++y) {
          const double p = problem.model.p_hat(x, a, y);
          if (p > 0.0) acc += p * problem.continuation(x, a, y, v);
        }
        q(x, a) = acc;
      }
    }
    return q;
  });
}

ActionValues naive_bound_step(const EvaluationProblem& problem, double gamma,
                              const ActionValues& q_prev) {
  problem.validate();
  const std::size_t nx = problem.n_states();
  const std::size_t na = problem.n_actions();
  const std::vector<double> v = mix(q_prev, problem.pi_e);
  ActionValues out{Matrix({nx, na}), q_prev.horizon + 1};
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t a = 0; a < na; ++a) {
      if (!problem.model.is_supported(x, a)) {
        out.q(x, a) = problem.unsupported_value(x, a, v);
        continue;
      }
      const RatioBounds ab = alpha_beta(problem.model.pi_hat(x, a), gamma);
      double acc = 0.0;
      for (std::size_t y = 0; y < nx; ++y) {
        const double p = problem.model.p_hat(x, a, y);
        if (p <= 0.0) continue;
        const double target = problem.continuation(x, a, y, v);
        acc += p * (target < 0.0 ? ab.beta : ab.alpha) * target;
      }
      out.q(x, a) = acc;
    }
  }
  return out;
}

FqeBoundResult naive_bound(const EvaluationProblem& problem, double gamma,
                           std::size_t horizon) {
  return iterate(problem, horizon, [&](const std::vector<double>& v, BoundDiagnostics& diag) {
    const std::size_t nx = problem.n_states();
    const std::size_t na = problem.n_actions();
    // naive_bound_step works on Q tables; feed it a table whose pi_e-mixture is v.
    ActionValues q_prev{Matrix({nx, na}), 0};
    for (std::size_t x = 0; x < nx; ++x) {
      for (std::size_t a = 0; a < na; ++a) q_prev.q(x, a) = v[x];
    }
    for (std::size_t x = 0; x < nx; ++x) {
      for (std::size_t a = 0; a < na; ++a) {
        if (!problem.model.is_supported(x, a) && problem.pi_e(x, a) > 0.0) {
          ++diag.unsupported_fallbacks;
        }
      }
    }
    return naive_bound_step(problem, gamma, q_prev).q;
  });
}

FqeBoundResult confounded_fqe(const EvaluationProblem& problem,
                              const SensitivityParams& params, std::size_t horizon) {
  params.validate();
  const std::size_t nx = problem.n_states();
  std::vector<double> cost;
  std::vector<double> weight;
  std::vector<double> lo;
  std::vector<double> hi;
  cost.reserve(nx);
  weight.reserve(nx);
  lo.reserve(nx);
  hi.reserve(nx);
  return iterate(problem, horizon, [&](const std::vector<double>& v, BoundDiagnostics& diag) {
    const std::size_t na = problem.n_actions();
    Matrix q({nx, na});
    for (std::size_t x = 0; x < nx; ++x) {
      for (std::size_t a = 0; a < na; ++a) {
        if (!problem.model.is_supported(x, a)) {
          if (problem.pi_e(x, a) > 0.0) ++diag.unsupported_fallbacks;
          q(x, a) = problem.unsupported_value(x, a, v);
          continue;
        }
        const RatioBounds ab = alpha_beta(problem.model.pi_hat(x, a), params.gamma);
        cost.clear();
        weight.clear();
        for (std::size_t y = 0; y < nx; ++y) {
          const double p = problem.model.p_hat(x, a, y);
          if (p <= 0.0) continue;
          cost.push_back(p * problem.continuation(x, a, y, v));
          weight.push_back(p);
        }
        lo.assign(cost.size(), ab.alpha);
        hi.assign(cost.size(), ab.beta);
        lp::Solution sol = lp::solve_knapsack(cost, weight, lo, hi, 1.0);
        ++diag.inner_evaluations;
        if (!sol.optimal()) {
          // w = 1 is always feasible since alpha <= 1 <= beta.
          ++diag.lp_infeasible;
          throw Error("confounded_fqe: LP infeasible at a supported pair");
        }
        q(x, a) = sol.objective;
      }
    }
    return q;
  });
}

double behavior_value(const EvaluationProblem& problem, std::size_t horizon) {
  problem.validate();
  const std::size_t nx = problem.n_states();
  const std::size_t na = problem.n_actions();
  std::vector<double> v(nx, 0.0);
  for (std::size_t k = 0; k < horizon; ++k) {
    std::vector<double> next(nx, 0.0);
    for (std::size_t x = 0; x < nx; ++x) {
      double acc = 0.0;
      for (std::size_t a = 0; a < na; ++a) {
        const double pa = problem.model.pi_hat(x, a);
        if (pa <= 0.0 || !problem.model.is_supported(x, a)) continue;
        double q = 0.0;
        for (std::size_t y = 0; y < nx; ++y) {
          const double p = problem.model.p_hat(x, a, y);
          if (p > 0.0) q += p * problem.continuation(x, a, y, v);
        }
        acc += pa * q;
      }
      next[x] = acc;
    }
    v = std::move(next);
  }
  return expected_under(problem.initial, v);
}

}  // namespace confope
