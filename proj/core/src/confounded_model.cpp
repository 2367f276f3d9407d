#include "confope/confounded_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "confope/error.hpp"
#include "confope/sensitivity.hpp"

namespace confope {

namespace {

constexpr std::size_t kU = kNumConfounderValues;

std::size_t argmax_lowest(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

/// Largest k in [1, k_max] with feasible(k), assuming feasibility is lost
/// monotonically as k grows. feasible(1) must hold.
template <typename Pred>
double largest_feasible(double k_max, Pred feasible) {
  if (feasible(k_max)) return k_max;
  double lo = 1.0;
  double hi = k_max;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (feasible(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

bool within_factor(double q, double q_ref, double bound) {
  if (q_ref <= 0.0 || q_ref >= 1.0) return true;
  if (q <= 0.0 || q >= 1.0) return false;
  const double r = odds_ratio(q, q_ref);
  return r <= bound * (1.0 + 1e-13) && 1.0 / r <= bound * (1.0 + 1e-13);
}

double odds_violation(double q, double q_ref) {
  if (q_ref <= 0.0 || q_ref >= 1.0) return 1.0;
  if (std::abs(q - q_ref) <= 1e-15) return 1.0;
  const double r = odds_ratio(q, q_ref);
  if (r == 0.0) return std::numeric_limits<double>::infinity();
  return std::max(r, 1.0 / r);
}

}  // namespace

ConfoundedMDP::ConfoundedMDP(Tensor4 transitions_u, Tensor3 behavior_u, double p_u,
                             Tensor3 rewards, std::vector<double> initial_dist,
                             double discount)
    : transitions_u_(std::move(transitions_u)),
      behavior_u_(std::move(behavior_u)),
      p_u_(p_u),
      rewards_(std::move(rewards)),
      initial_(std::move(initial_dist)),
      discount_(discount) {
  const auto& ts = transitions_u_.shape();
  const std::size_t nx = ts[0];
  const std::size_t na = ts[2];
  if (nx == 0 || na == 0) throw DimensionError("ConfoundedMDP: empty model");
  if (ts[1] != kU) throw DimensionError("ConfoundedMDP: confounder must be binary");
  if (ts[3] != nx) throw DimensionError("ConfoundedMDP: transitions must be [X][U][A][X]");
  if (behavior_u_.shape() != Tensor3::Shape{nx, kU, na}) {
    throw DimensionError("ConfoundedMDP: behavior must be [X][U][A]");
  }
  if (rewards_.shape() != Tensor3::Shape{nx, na, nx}) {
    throw DimensionError("ConfoundedMDP: rewards must be [X][A][X]");
  }
  if (initial_.size() != nx) throw DimensionError("ConfoundedMDP: initial distribution length");
  if (!(p_u_ >= 0.0 && p_u_ <= 1.0)) throw ValidationError("ConfoundedMDP: p_u outside [0,1]");
  if (!(discount_ >= 0.0 && discount_ <= 1.0)) {
    throw ValidationError("ConfoundedMDP: discount outside [0,1]");
  }
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t u = 0; u < kU; ++u) {
      check_distribution(behavior_u_.row(x, u), "ConfoundedMDP behavior row");
      for (std::size_t a = 0; a < na; ++a) {
        check_distribution(transitions_u_.row(x, u, a), "ConfoundedMDP transition row");
      }
    }
  }
  check_distribution(initial_, "ConfoundedMDP initial distribution");
  for (double r : rewards_.flat()) {
    if (!std::isfinite(r)) throw ValidationError("ConfoundedMDP: non-finite reward");
  }
}

ConfoundedMDP ConfoundedMDP::unconfounded(const TabularMDP& mdp, const PolicyTable& behavior,
                                          double p_u) {
  check_same_shape(mdp, behavior);
  const std::size_t nx = mdp.n_states();
  const std::size_t na = mdp.n_actions();
  Tensor4 tu({nx, kU, na, nx});
  Tensor3 bu({nx, kU, na});
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t u = 0; u < kU; ++u) {
      for (std::size_t a = 0; a < na; ++a) {
        bu(x, u, a) = behavior(x, a);
        auto src = mdp.transition_row(x, a);
        std::copy(src.begin(), src.end(), tu.row(x, u, a).begin());
      }
    }
  }
  return ConfoundedMDP(std::move(tu), std::move(bu), p_u, mdp.rewards(), mdp.initial_dist(),
                       mdp.discount());
}

double ConfoundedMDP::marginal_behavior(std::size_t x, std::size_t a) const {
  return (1.0 - p_u_) * behavior_u_(x, 0, a) + p_u_ * behavior_u_(x, 1, a);
}

MarginalModel marginalize(const ConfoundedMDP& cm) {
  const std::size_t nx = cm.n_states();
  const std::size_t na = cm.n_actions();
  Matrix pi({nx, na});
  Tensor3 true_m({nx, na, nx});
  Tensor3 apparent({nx, na, nx});
  std::vector<bool> defined(nx * na, false);
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t a = 0; a < na; ++a) {
      const double pa = cm.marginal_behavior(x, a);
      pi(x, a) = pa;
      for (std::size_t y = 0; y < nx; ++y) {
        double tm = 0.0;
        double joint = 0.0;
        for (std::size_t u = 0; u < kU; ++u) {
          tm += cm.weight(u) * cm.transition(x, u, a, y);
          joint += cm.weight(u) * cm.behavior(x, u, a) * cm.transition(x, u, a, y);
        }
        true_m(x, a, y) = tm;
        if (pa > 0.0) apparent(x, a, y) = joint / pa;
      }
      defined[x * na + a] = pa > 0.0;
    }
  }
  TabularMDP mdp(true_m, cm.rewards(), cm.initial_dist(), cm.discount());
  return MarginalModel{std::move(mdp), PolicyTable(std::move(pi)), std::move(true_m),
                       std::move(apparent), std::move(defined)};
}

double reweighted_conditional_mean(const ConfoundedMDP& cm, const TransitionFunction& f,
                                   std::size_t x, std::size_t a) {
  const double pa = cm.marginal_behavior(x, a);
  if (!(pa > 0.0)) {
    throw ParameterError("reweighted_conditional_mean: pi_b(a|x) = 0 at (x=" +
                         std::to_string(x) + ", a=" + std::to_string(a) +
                         "); no u has positive posterior");
  }
  double acc = 0.0;
  for (std::size_t u = 0; u < kU; ++u) {
    const double posterior = cm.behavior(x, u, a) * cm.weight(u) / pa;
    if (posterior == 0.0) continue;
    const double pu = cm.behavior(x, u, a);
    if (!(pu > 0.0)) {
      throw ParameterError("reweighted_conditional_mean: pi_b(a|x,u) = 0 at (x=" +
                           std::to_string(x) + ", a=" + std::to_string(a) +
                           ", u=" + std::to_string(u) + ")");
    }
    const double ratio = pa / pu;
    for (std::size_t y = 0; y < cm.n_states(); ++y) {
      const double p = cm.transition(x, u, a, y);
      if (p != 0.0) acc += posterior * p * ratio * f(x, a, y);
    }
  }
  return acc;
}

double marginal_conditional_mean(const ConfoundedMDP& cm, const TransitionFunction& f,
                                 std::size_t x, std::size_t a) {
  double acc = 0.0;
  for (std::size_t u = 0; u < kU; ++u) {
    for (std::size_t y = 0; y < cm.n_states(); ++y) {
      const double p = cm.transition(x, u, a, y);
      if (p != 0.0) acc += cm.weight(u) * p * f(x, a, y);
    }
  }
  return acc;
}

double observable_implication_residual(const ConfoundedMDP& cm, const Matrix& pi_hat,
                                       const Tensor3& p_hat,
                                       const std::vector<bool>& supported) {
  const std::size_t nx = cm.n_states();
  const std::size_t na = cm.n_actions();
  if (pi_hat.shape() != Matrix::Shape{nx, na} || p_hat.shape() != Tensor3::Shape{nx, na, nx}) {
    throw DimensionError("observable_implication_residual: shape mismatch");
  }
  double worst = 0.0;
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t a = 0; a < na; ++a) {
      double mix = 0.0;
      for (std::size_t u = 0; u < kU; ++u) mix += cm.weight(u) * cm.behavior(x, u, a);
      worst = std::max(worst, std::abs(mix - pi_hat(x, a)));
      if (!supported.empty() && !supported[x * na + a]) continue;
      for (std::size_t y = 0; y < nx; ++y) {
        double joint = 0.0;
        for (std::size_t u = 0; u < kU; ++u) {
          joint += cm.weight(u) * cm.behavior(x, u, a) * cm.transition(x, u, a, y);
        }
        worst = std::max(worst, std::abs(joint - pi_hat(x, a) * p_hat(x, a, y)));
      }
    }
  }
  return worst;
}

double observable_implication_residual(const ConfoundedMDP& cm) {
  MarginalModel m = marginalize(cm);
  return observable_implication_residual(cm, m.behavior.probs(), m.apparent_marginal,
                                         m.apparent_defined);
}

SensitivityAudit audit_sensitivity(const ConfoundedMDP& cm) {
  const MarginalModel m = marginalize(cm);
  const std::size_t nx = cm.n_states();
  const std::size_t na = cm.n_actions();
  SensitivityAudit audit;
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t a = 0; a < na; ++a) {
      const double pa = m.behavior(x, a);
      for (std::size_t u = 0; u < kU; ++u) {
        audit.gamma = std::max(audit.gamma, odds_violation(cm.behavior(x, u, a), pa));
      }
      if (!m.defined(x, a)) continue;
      for (std::size_t y = 0; y < nx; ++y) {
        const double ph = m.apparent_marginal(x, a, y);
        for (std::size_t u = 0; u < kU; ++u) {
          audit.delta = std::max(audit.delta, odds_violation(cm.transition(x, u, a, y), ph));
        }
      }
    }
  }
  return audit;
}

TiltSignal parse_tilt_signal(const std::string& name) {
  if (name == "reward") return TiltSignal::Reward;
  if (name == "optimal_value" || name == "optimal-value") return TiltSignal::OptimalValue;
  throw ParameterError("unknown tilt signal '" + name + "' (expected reward|optimal_value)");
}

std::string to_string(TiltSignal signal) {
  return signal == TiltSignal::Reward ? "reward" : "optimal_value";
}

InjectionResult inject_confounding(const TabularMDP& mdp, const PolicyTable& behavior,
                                   const InjectionOptions& options) {
  check_same_shape(mdp, behavior);
  if (!(options.gamma_star >= 1.0) || !(options.delta_star >= 1.0)) {
    throw ParameterError("inject_confounding: Gamma* and Delta* must be >= 1");
  }
  const double p = options.p;
  if (!(p > 0.0 && p < 1.0)) throw ParameterError("inject_confounding: p must lie in (0,1)");
  const std::size_t nx = mdp.n_states();
  const std::size_t na = mdp.n_actions();

  // Rankings: actions by expected reward or Q*, successors by R or R + gamma V*.
  Matrix action_signal({nx, na});
  std::vector<double> v_star(nx, 0.0);
  if (options.signal == TiltSignal::Reward) {
    for (std::size_t x = 0; x < nx; ++x) {
      for (std::size_t a = 0; a < na; ++a) action_signal(x, a) = mdp.expected_reward(x, a);
    }
  } else {
    const std::size_t h = std::max<std::size_t>(options.horizon, 1);
    action_signal = optimal_action_values(mdp, h).q;
    v_star = optimal_values(mdp, h - 1).v;
  }
  auto successor_signal = [&](std::size_t x, std::size_t a, std::size_t y) {
    const double r = mdp.reward(x, a, y);
    return options.signal == TiltSignal::Reward ? r : r + mdp.discount() * v_star[y];
  };

  const double w0 = 1.0 - p;
  const double w1 = p;
  Tensor3 bu({nx, kU, na});
  for (std::size_t x = 0; x < nx; ++x) {
    auto pi = behavior.row(x);
    const std::size_t best = argmax_lowest(action_signal.row(x));
    const double q = pi[best];
    double q1 = q;
    double q0 = q;
    if (q > 0.0 && q < 1.0 && options.gamma_star > 1.0) {
      auto split = [&](double k) {
        const double up = scale_odds(q, k);
        return std::pair{up, (q - w1 * up) / w0};
      };
      const double k = largest_feasible(options.gamma_star, [&](double k) {
        auto [up, down] = split(k);
        return down > 0.0 && down < 1.0 && within_factor(down, q, options.gamma_star);
      });
      std::tie(q1, q0) = split(k);
    }
    const double tilted[kU] = {q0, q1};
    for (std::size_t u = 0; u < kU; ++u) {
      const double rest = q < 1.0 ? (1.0 - tilted[u]) / (1.0 - q) : 0.0;
      for (std::size_t a = 0; a < na; ++a) {
        bu(x, u, a) = a == best ? tilted[u] : pi[a] * rest;
      }
    }
  }

  Tensor4 tu({nx, kU, na, nx});
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t a = 0; a < na; ++a) {
      auto row = mdp.transition_row(x, a);
      for (std::size_t u = 0; u < kU; ++u) {
        std::copy(row.begin(), row.end(), tu.row(x, u, a).begin());
      }
      const double pa = behavior(x, a);
      std::vector<std::size_t> support;
      for (std::size_t y = 0; y < nx; ++y) {
        if (row[y] > 0.0) support.push_back(y);
      }
      if (pa <= 0.0 || support.size() < 2 || options.delta_star == 1.0) continue;
      std::stable_sort(support.begin(), support.end(), [&](std::size_t i, std::size_t j) {
        return successor_signal(x, a, i) > successor_signal(x, a, j);
      });
      const std::size_t n_high = (support.size() + 1) / 2;
      std::vector<bool> high(nx, false);
      double h = 0.0;
      for (std::size_t i = 0; i < n_high; ++i) {
        high[support[i]] = true;
        h += row[support[i]];
      }
      if (h <= 0.0 || h >= 1.0) continue;
      const double rho0 = w0 * bu(x, 0, a) / pa;
      const double rho1 = w1 * bu(x, 1, a) / pa;
      auto split = [&](double k) {
        const double up = scale_odds(h, k);
        return std::pair{up, (h - w1 * up) / w0};
      };
      const double k = largest_feasible(options.delta_star, [&](double k) {
        auto [up, down] = split(k);
        if (!(down > 0.0 && down < 1.0)) return false;
        const double apparent = rho0 * down + rho1 * up;
        return within_factor(up, apparent, options.delta_star) &&
               within_factor(down, apparent, options.delta_star);
      });
      auto [h1, h0] = split(k);
      const double hu[kU] = {h0, h1};
      for (std::size_t u = 0; u < kU; ++u) {
        auto dst = tu.row(x, u, a);
        for (std::size_t y = 0; y < nx; ++y) {
          dst[y] = high[y] ? row[y] * hu[u] / h : row[y] * (1.0 - hu[u]) / (1.0 - h);
        }
      }
    }
  }

  ConfoundedMDP model(std::move(tu), std::move(bu), p, mdp.rewards(), mdp.initial_dist(),
                      mdp.discount());
  SensitivityAudit achieved = audit_sensitivity(model);
  return InjectionResult{std::move(model), achieved};
}

double true_policy_value(const ConfoundedMDP& cm, const PolicyTable& pi_e,
                         std::size_t horizon) {
  return policy_value(marginalize(cm).mdp, pi_e, horizon).expected_value;
}

}  // namespace confope
