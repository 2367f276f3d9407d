#include "confope/sensitivity.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "confope/error.hpp"

namespace confope {

namespace {

void require_rho(double rho, const char* name) {
  if (!(rho >= 1.0)) {
    throw ParameterError(std::string(name) + " must be >= 1, got " + std::to_string(rho));
  }
}

IntervalBox box_from_row(std::span<const double> row, double rho) {
  IntervalBox box;
  box.lo.reserve(row.size());
  box.hi.reserve(row.size());
  for (double q : row) {
    Interval iv = odds_interval(q, rho);
    box.lo.push_back(iv.lo);
    box.hi.push_back(iv.hi);
  }
  return box;
}

}  // namespace

void SensitivityParams::validate() const {
  require_rho(gamma, "Gamma");
  require_rho(delta, "Delta");
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ParameterError("p must lie in [0,1], got " + std::to_string(p));
  }
}

bool IntervalBox::contains(std::span<const double> point, double tol) const {
  if (point.size() != lo.size()) return false;
  for (std::size_t i = 0; i < point.size(); ++i) {
    if (point[i] < lo[i] - tol || point[i] > hi[i] + tol) return false;
  }
  return true;
}

RatioBounds alpha_beta(double pi_hat, double gamma) {
  require_rho(gamma, "Gamma");
  return {pi_hat + (1.0 - pi_hat) / gamma, gamma + pi_hat * (1.0 - gamma)};
}

Interval odds_interval(double q_hat, double rho) {
  require_rho(rho, "odds factor");
  if (q_hat <= 0.0 || q_hat >= 1.0 || rho == 1.0) return {q_hat, q_hat};
  const double lo = q_hat / (q_hat + rho * (1.0 - q_hat));
  const double hi = rho * q_hat / (rho * q_hat + (1.0 - q_hat));
  return {lo, hi};
}

double scale_odds(double q, double factor) {
  if (q <= 0.0 || q >= 1.0) return q;
  return factor * q / (factor * q + (1.0 - q));
}

double odds_ratio(double q, double q_ref) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (q_ref <= 0.0 || q_ref >= 1.0) return 1.0;
  if (q <= 0.0) return 0.0;
  if (q >= 1.0) return inf;
  return (q / (1.0 - q)) / (q_ref / (1.0 - q_ref));
}

IntervalBox policy_box(std::span<const double> pi_hat_row, double gamma) {
  return box_from_row(pi_hat_row, gamma);
}

IntervalBox transition_box(std::span<const double> p_hat_row, double delta) {
  return box_from_row(p_hat_row, delta);
}

}  // namespace confope
