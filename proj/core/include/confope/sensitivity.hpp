#pragma once

#include <span>
#include <vector>

namespace confope {

/// Sensitivity model: Gamma bounds the odds ratio between pi_b(a|x,u) and
/// pi_b(a|x), Delta bounds the odds ratio between P(x'|x,u,a) and the observed
/// P(x'|x,a), and p = p(u = 1) for a binary confounder.
struct SensitivityParams {
  double gamma = 1.0;
  double delta = 1.0;
  double p = 0.5;

  /// Throws ParameterError unless gamma >= 1, delta >= 1 and p in [0,1].
  void validate() const;
};

/// Bounds alpha <= pi_b(a|x) / pi_b(a|x,u) <= beta.
struct RatioBounds {
  double alpha = 1.0;
  double beta = 1.0;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Entrywise feasible intervals lo <= value <= hi.
struct IntervalBox {
  std::vector<double> lo;
  std::vector<double> hi;

  bool contains(std::span<const double> point, double tol = 0.0) const;
};

/// alpha = pi + (1 - pi) / Gamma, beta = Gamma + pi (1 - Gamma).
RatioBounds alpha_beta(double pi_hat, double gamma);

/// All probabilities q whose odds are within a factor rho of the odds of
/// q_hat. q_hat in {0, 1} is a fixed point of the odds map and yields the
/// degenerate interval {q_hat}.
Interval odds_interval(double q_hat, double rho);

/// Probability whose odds are exactly `factor` times the odds of q.
double scale_odds(double q, double factor);

/// Odds ratio [q / (1 - q)] / [q_ref / (1 - q_ref)]; +inf or 0 at the edges.
double odds_ratio(double q, double q_ref);

/// Feasible box for pi_b(.|x,u) given the observed row pi_hat(.|x).
IntervalBox policy_box(std::span<const double> pi_hat_row, double gamma);

/// Feasible box for P(.|x,u,a) given the observed row P_hat(.|x,a).
IntervalBox transition_box(std::span<const double> p_hat_row, double delta);

}  // namespace confope
