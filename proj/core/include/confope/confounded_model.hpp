#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "confope/ndarray.hpp"
#include "confope/tabular_mdp.hpp"

namespace confope {

/// Number of values the unobserved confounder can take. Binary is enough for
/// worst-case bounds, so it is fixed.
inline constexpr std::size_t kNumConfounderValues = 2;

/**
 * Full-information MDP over observed state x and an unobserved binary state u
 * that is redrawn iid every step with p(u = 1) = p_u.
 *
 * transitions_u is [x][u][a][x'] = P(x'|x,u,a); behavior_u is [x][u][a] =
 * pi_b(a|x,u). Rewards depend on (x, a, x') only.
 */
class ConfoundedMDP {
 public:
  ConfoundedMDP(Tensor4 transitions_u, Tensor3 behavior_u, double p_u, Tensor3 rewards,
                std::vector<double> initial_dist, double discount);

  /// Lifts an ordinary MDP and behavior policy to a model in which u has no
  /// effect on either.
  static ConfoundedMDP unconfounded(const TabularMDP& mdp, const PolicyTable& behavior,
                                    double p_u = 0.5);

  std::size_t n_states() const { return transitions_u_.extent(0); }
  std::size_t n_actions() const { return transitions_u_.extent(2); }
  double p_u() const { return p_u_; }
  /// p(u) for u in {0, 1}.
  double weight(std::size_t u) const { return u == 1 ? p_u_ : 1.0 - p_u_; }
  double discount() const { return discount_; }

  const Tensor4& transitions_u() const { return transitions_u_; }
  const Tensor3& behavior_u() const { return behavior_u_; }
  const Tensor3& rewards() const { return rewards_; }
  const std::vector<double>& initial_dist() const { return initial_; }

  double transition(std::size_t x, std::size_t u, std::size_t a, std::size_t next) const {
    return transitions_u_(x, u, a, next);
  }
  double behavior(std::size_t x, std::size_t u, std::size_t a) const {
    return behavior_u_(x, u, a);
  }

  /// pi_b(a|x) = sum_u p(u) pi_b(a|x,u).
  double marginal_behavior(std::size_t x, std::size_t a) const;

 private:
  Tensor4 transitions_u_;
  Tensor3 behavior_u_;
  double p_u_;
  Tensor3 rewards_;
  std::vector<double> initial_;
  double discount_;
};

/**
 * Marginal views of a confounded model.
 *
 * `true_marginal` is sum_u p(u) P(x'|x,u,a): the dynamics an intervention
 * would see. `apparent_marginal` is sum_u p(u|x,a) P(x'|x,u,a) with the
 * Bayes-rule posterior p(u|x,a) = pi_b(a|x,u) p(u) / pi_b(a|x): what a naive
 * estimator recovers from logged data. Rows with pi_b(a|x) = 0 are undefined
 * in the apparent view and left as zeros with apparent_defined = false.
 */
struct MarginalModel {
  TabularMDP mdp;  // built on true_marginal
  PolicyTable behavior;
  Tensor3 true_marginal;
  Tensor3 apparent_marginal;
  std::vector<bool> apparent_defined;  // [x * n_actions + a]

  bool defined(std::size_t x, std::size_t a) const {
    return apparent_defined[x * behavior.n_actions() + a];
  }
};

MarginalModel marginalize(const ConfoundedMDP& cm);

using TransitionFunction = std::function<double(std::size_t, std::size_t, std::size_t)>;

/// E_D[(pi_b(a|x) / pi_b(a|x,u)) f(x,a,x') | x, a], evaluated exactly under the
/// data distribution p(u|x,a) P(x'|x,u,a). Throws ParameterError naming
/// (x, a, u) if a confounder value with positive posterior has zero behavior
/// probability.
double reweighted_conditional_mean(const ConfoundedMDP& cm, const TransitionFunction& f,
                                   std::size_t x, std::size_t a);

/// sum_u p(u) sum_{x'} P(x'|x,u,a) f(x,a,x'), the interventional target.
double marginal_conditional_mean(const ConfoundedMDP& cm, const TransitionFunction& f,
                                 std::size_t x, std::size_t a);

/// Largest violation of the two observable implications
///   sum_u p(u) pi_b(a|x,u) = pi_b(a|x)
///   sum_u p(u) pi_b(a|x,u) P(x'|x,u,a) = pi_b(a|x) P_hat(x'|x,a)
/// with `pi_hat` / `p_hat` as the observed side. Rows where `supported` is
/// false are skipped in the second identity; an empty mask means all rows.
double observable_implication_residual(const ConfoundedMDP& cm, const Matrix& pi_hat,
                                       const Tensor3& p_hat,
                                       const std::vector<bool>& supported = {});

/// Same check against the model's own marginalize() output.
double observable_implication_residual(const ConfoundedMDP& cm);

struct SensitivityAudit {
  double gamma = 1.0;  // smallest Gamma satisfying the policy odds bound
  double delta = 1.0;  // smallest Delta satisfying the transition odds bound
};

/// Measures the tightest (Gamma, Delta) a model satisfies. Policy odds are
/// taken against pi_b(a|x); transition odds against the apparent marginal
/// (the observed P_hat). Entries whose reference probability is 0 or 1 are
/// skipped.
SensitivityAudit audit_sensitivity(const ConfoundedMDP& cm);

enum class TiltSignal { Reward, OptimalValue };

TiltSignal parse_tilt_signal(const std::string& name);
std::string to_string(TiltSignal signal);

struct InjectionOptions {
  double gamma_star = 2.0;
  double delta_star = 2.0;
  double p = 0.5;
  TiltSignal signal = TiltSignal::OptimalValue;
  /// Horizon for the optimal-value ranking.
  std::size_t horizon = 10;
};

struct InjectionResult {
  ConfoundedMDP model;
  /// Audited parameters of `model`; at most the requested ones, smaller where
  /// the requested tilt would leave [0, 1].
  SensitivityAudit achieved;
};

/**
 * Adds an iid binary confounder to (mdp, behavior).
 *
 * In each state the action with the best signal has its odds raised under
 * u = 1 and lowered under u = 0; in each (x, a) the better-ranked half of the
 * successor states gets the same treatment. Both tilts are marginal-corrected,
 * so marginalize() returns mdp.transitions() and `behavior` exactly. Tilt
 * strengths are the largest that keep the audited parameters within
 * (gamma_star, delta_star).
 */
InjectionResult inject_confounding(const TabularMDP& mdp, const PolicyTable& behavior,
                                   const InjectionOptions& options);

/// Value of pi_e in the full-information model. With iid u this is its value
/// in the true marginal MDP.
double true_policy_value(const ConfoundedMDP& cm, const PolicyTable& pi_e,
                         std::size_t horizon);

}  // namespace confope
