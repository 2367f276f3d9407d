#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "confope/ndarray.hpp"

namespace confope::lp {

/// Absolute feasibility tolerance shared by every solver in this module.
inline constexpr double kFeasibilityTol = 1e-9;

/// minimize c.w  subject to  lo <= w <= hi,  A w = b.
///
/// A is stored as an m x n matrix; m = 0 is allowed (pure box problem).
struct BoxEqualityLP {
  std::vector<double> c;
  std::vector<double> lo;
  std::vector<double> hi;
  Matrix A;
  std::vector<double> b;

  std::size_t n_vars() const { return c.size(); }
  std::size_t n_rows() const { return b.size(); }

  /// Throws DimensionError / ParameterError on inconsistent shapes or lo > hi.
  void validate() const;
};

enum class Status { Optimal, Infeasible };

struct Solution {
  Status status = Status::Infeasible;
  std::vector<double> w;
  double objective = 0.0;

  bool optimal() const { return status == Status::Optimal; }
};

/// Exact solver. Single-row problems with nonnegative coefficients use the
/// greedy routine below; everything else goes through a dense two-phase
/// simplex with Bland's rule.
Solution solve(const BoxEqualityLP& problem);

/// Dense two-phase simplex, regardless of structure.
Solution solve_simplex(const BoxEqualityLP& problem);

/// Vertex enumeration over basic solutions. Exact but exponential; refuses
/// problems with more than `kBruteForceMaxVars` variables.
inline constexpr std::size_t kBruteForceMaxVars = 8;
Solution solve_bruteforce(const BoxEqualityLP& problem);

/// Fractional knapsack: minimize c.w  s.t.  lo <= w <= hi, weights.w = budget,
/// with weights >= 0. Variables are filled from `lo` in order of increasing
/// c/weight; ties go to the lower index.
Solution solve_knapsack(std::span<const double> c, std::span<const double> weights,
                        std::span<const double> lo, std::span<const double> hi,
                        double budget);

}  // namespace confope::lp
