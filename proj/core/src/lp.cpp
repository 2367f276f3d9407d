#include "confope/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "confope/error.hpp"

namespace confope::lp {

namespace {

constexpr double kPivotTol = 1e-11;

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

Solution finish(const BoxEqualityLP& problem, std::vector<double> w) {
  for (std::size_t j = 0; j < w.size(); ++j) {
    w[j] = std::clamp(w[j], problem.lo[j], problem.hi[j]);
  }
  Solution sol;
  sol.status = Status::Optimal;
  sol.objective = dot(problem.c, w);
  sol.w = std::move(w);
  return sol;
}

/// Dense tableau for  min cost.x  s.t.  rows x = rhs, x >= 0.
class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), t_(rows * (cols + 1), 0.0), basis_(rows, 0),
        active_(rows, true) {}

  double& at(std::size_t r, std::size_t c) { return t_[r * (cols_ + 1) + c]; }
  double at(std::size_t r, std::size_t c) const { return t_[r * (cols_ + 1) + c]; }
  double& rhs(std::size_t r) { return at(r, cols_); }
  double rhs(std::size_t r) const { return at(r, cols_); }

  std::vector<std::size_t>& basis() { return basis_; }
  std::vector<bool>& active() { return active_; }

  void pivot(std::size_t pr, std::size_t pc) {
    const double piv = at(pr, pc);
    for (std::size_t c = 0; c <= cols_; ++c) at(pr, c) /= piv;
    for (std::size_t r = 0; r < rows_; ++r) {
      if (r == pr || !active_[r]) continue;
      const double f = at(r, pc);
      if (f == 0.0) continue;
      for (std::size_t c = 0; c <= cols_; ++c) at(r, c) -= f * at(pr, c);
      at(r, pc) = 0.0;
    }
    basis_[pr] = pc;
  }

  /// Runs primal simplex with Bland's rule on `cost`; columns with
  /// allowed[c] == false never enter. Returns false if unbounded.
  bool optimize(const std::vector<double>& cost, const std::vector<bool>& allowed) {
    const std::size_t max_iter = 50 * (rows_ + cols_) + 1000;
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
      std::size_t enter = cols_;
      for (std::size_t c = 0; c < cols_ && enter == cols_; ++c) {
        if (!allowed[c] || is_basic(c)) continue;
        double d = cost[c];
        for (std::size_t r = 0; r < rows_; ++r) {
          if (active_[r]) d -= cost[basis_[r]] * at(r, c);
        }
        if (d < -1e-12) enter = c;
      }
      if (enter == cols_) return true;

      std::size_t leave = rows_;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < rows_; ++r) {
        if (!active_[r]) continue;
        const double a = at(r, enter);
        if (a <= kPivotTol) continue;
        const double ratio = std::max(rhs(r), 0.0) / a;
        if (ratio < best - 1e-15 ||
            (std::abs(ratio - best) <= 1e-15 && leave < rows_ && basis_[r] < basis_[leave])) {
          best = ratio;
          leave = r;
        }
      }
      if (leave == rows_) return false;
      pivot(leave, enter);
    }
    throw Error("lp::solve_simplex: iteration limit reached");
  }

  bool is_basic(std::size_t c) const {
    for (std::size_t r = 0; r < rows_; ++r) {
      if (active_[r] && basis_[r] == c) return true;
    }
    return false;
  }

  double objective(const std::vector<double>& cost) const {
    double acc = 0.0;
    for (std::size_t r = 0; r < rows_; ++r) {
      if (active_[r]) acc += cost[basis_[r]] * rhs(r);
    }
    return acc;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> t_;
  std::vector<std::size_t> basis_;
  std::vector<bool> active_;
};

/// Row-reduces [A | b]; returns the independent rows or nullopt-like flag
/// `consistent = false` when a zero row has nonzero right-hand side.
struct ReducedSystem {
  std::vector<std::vector<double>> rows;
  std::vector<double> rhs;
  bool consistent = true;
};

ReducedSystem reduce_rows(const BoxEqualityLP& problem) {
  const std::size_t m = problem.n_rows();
  const std::size_t n = problem.n_vars();
  std::vector<std::vector<double>> a(m, std::vector<double>(n + 1));
  double scale = 1.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      a[i][j] = problem.A(i, j);
      scale = std::max(scale, std::abs(a[i][j]));
    }
    a[i][n] = problem.b[i];
  }
  const double tol = 1e-10 * scale;
  std::size_t rank = 0;
  for (std::size_t col = 0; col < n && rank < m; ++col) {
    std::size_t piv = rank;
    for (std::size_t r = rank + 1; r < m; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    }
    if (std::abs(a[piv][col]) <= tol) continue;
    std::swap(a[piv], a[rank]);
    for (std::size_t r = 0; r < m; ++r) {
      if (r == rank) continue;
      const double f = a[r][col] / a[rank][col];
      if (f == 0.0) continue;
      for (std::size_t c = col; c <= n; ++c) a[r][c] -= f * a[rank][c];
    }
    ++rank;
  }
  ReducedSystem out;
  for (std::size_t r = rank; r < m; ++r) {
    if (std::abs(a[r][n]) > kFeasibilityTol * (1.0 + std::abs(problem.b[r]))) {
      out.consistent = false;
    }
  }
  for (std::size_t r = 0; r < rank; ++r) {
    out.rhs.push_back(a[r][n]);
    a[r].pop_back();
    out.rows.push_back(std::move(a[r]));
  }
  return out;
}

/// Solves the square system M x = y in place; false if singular.
bool solve_square(std::vector<std::vector<double>> m, std::vector<double> y,
                  std::vector<double>& x) {
  const std::size_t k = y.size();
  for (std::size_t col = 0; col < k; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < k; ++r) {
      if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
    }
    if (std::abs(m[piv][col]) < 1e-12) return false;
    std::swap(m[piv], m[col]);
    std::swap(y[piv], y[col]);
    for (std::size_t r = col + 1; r < k; ++r) {
      const double f = m[r][col] / m[col][col];
      for (std::size_t c = col; c < k; ++c) m[r][c] -= f * m[col][c];
      y[r] -= f * y[col];
    }
  }
  x.assign(k, 0.0);
  for (std::size_t i = k; i-- > 0;) {
    double acc = y[i];
    for (std::size_t c = i + 1; c < k; ++c) acc -= m[i][c] * x[c];
    x[i] = acc / m[i][i];
  }
  return true;
}

bool next_combination(std::vector<std::size_t>& idx, std::size_t n) {
  const std::size_t k = idx.size();
  for (std::size_t i = k; i-- > 0;) {
    if (idx[i] < n - k + i) {
      ++idx[i];
      for (std::size_t j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
      return true;
    }
  }
  return false;
}

}  // namespace

void BoxEqualityLP::validate() const {
  const std::size_t n = c.size();
  if (lo.size() != n || hi.size() != n) {
    throw DimensionError("BoxEqualityLP: box bounds must match the cost vector");
  }
  if (b.size() != A.extent(0) || (b.size() > 0 && A.extent(1) != n)) {
    throw DimensionError("BoxEqualityLP: constraint matrix shape mismatch");
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (!(lo[j] <= hi[j])) {
      throw ParameterError("BoxEqualityLP: lo > hi at variable " + std::to_string(j));
    }
  }
}

Solution solve_knapsack(std::span<const double> c, std::span<const double> weights,
                        std::span<const double> lo, std::span<const double> hi,
                        double budget) {
  const std::size_t n = c.size();
  Solution sol;
  sol.w.assign(lo.begin(), lo.end());
  double remaining = budget;
  std::vector<std::size_t> order;
  order.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    remaining -= weights[j] * lo[j];
    if (weights[j] > 0.0) {
      order.push_back(j);
    } else if (c[j] < 0.0) {
      sol.w[j] = hi[j];
    }
  }
  const double tol = kFeasibilityTol * (1.0 + std::abs(budget));
  if (remaining < -tol) return Solution{};
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return c[i] / weights[i] < c[j] / weights[j];
  });
  for (std::size_t j : order) {
    if (remaining <= 0.0) break;
    const double room = std::max(hi[j] - lo[j], 0.0);
    const double take = std::min(room, remaining / weights[j]);
    sol.w[j] += take;
    remaining -= take * weights[j];
  }
  if (remaining > tol) return Solution{};
  sol.status = Status::Optimal;
  sol.objective = dot(c, sol.w);
  return sol;
}

Solution solve_simplex(const BoxEqualityLP& problem) {
  problem.validate();
  const std::size_t n = problem.n_vars();
  const std::size_t m = problem.n_rows();
  // Columns: z_j = w_j - lo_j (n), slacks for z_j <= hi_j - lo_j (n),
  // artificials for the equality rows (m).
  const std::size_t cols = 2 * n + m;
  Tableau tab(m + n, cols);
  for (std::size_t i = 0; i < m; ++i) {
    double rhs = problem.b[i];
    for (std::size_t j = 0; j < n; ++j) rhs -= problem.A(i, j) * problem.lo[j];
    const double sign = rhs < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < n; ++j) tab.at(i, j) = sign * problem.A(i, j);
    tab.at(i, 2 * n + i) = 1.0;
    tab.rhs(i) = sign * rhs;
    tab.basis()[i] = 2 * n + i;
  }
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t r = m + j;
    tab.at(r, j) = 1.0;
    tab.at(r, n + j) = 1.0;
    tab.rhs(r) = problem.hi[j] - problem.lo[j];
    tab.basis()[r] = n + j;
  }

  std::vector<bool> allowed(cols, true);
  std::vector<double> phase1(cols, 0.0);
  for (std::size_t i = 0; i < m; ++i) phase1[2 * n + i] = 1.0;
  tab.optimize(phase1, allowed);

  double scale = 1.0;
  for (double v : problem.b) scale = std::max(scale, std::abs(v));
  if (tab.objective(phase1) > kFeasibilityTol * scale) return Solution{};

  for (std::size_t r = 0; r < m; ++r) {
    if (tab.basis()[r] < 2 * n) continue;
    std::size_t enter = cols;
    for (std::size_t c = 0; c < 2 * n && enter == cols; ++c) {
      if (!tab.is_basic(c) && std::abs(tab.at(r, c)) > 1e-9) enter = c;
    }
    if (enter == cols) {
      tab.active()[r] = false;  // redundant equality
    } else {
      tab.pivot(r, enter);
    }
  }
  for (std::size_t i = 0; i < m; ++i) allowed[2 * n + i] = false;

  std::vector<double> phase2(cols, 0.0);
  for (std::size_t j = 0; j < n; ++j) phase2[j] = problem.c[j];
  if (!tab.optimize(phase2, allowed)) {
    throw Error("lp::solve_simplex: unbounded direction in a box-constrained problem");
  }

  std::vector<double> w(problem.lo);
  for (std::size_t r = 0; r < tab.rows(); ++r) {
    if (!tab.active()[r]) continue;
    const std::size_t col = tab.basis()[r];
    if (col < n) w[col] += tab.rhs(r);
  }
  return finish(problem, std::move(w));
}

Solution solve(const BoxEqualityLP& problem) {
  problem.validate();
  if (problem.n_rows() == 1) {
    auto coeffs = problem.A.row(0);
    const bool nonneg = std::all_of(coeffs.begin(), coeffs.end(),
                                    [](double v) { return v >= 0.0; });
    if (nonneg) {
      Solution s = solve_knapsack(problem.c, coeffs, problem.lo, problem.hi, problem.b[0]);
      if (s.optimal()) return finish(problem, std::move(s.w));
      return s;
    }
  }
  if (problem.n_rows() == 0) {
    std::vector<double> w(problem.n_vars());
    for (std::size_t j = 0; j < w.size(); ++j) {
      w[j] = problem.c[j] < 0.0 ? problem.hi[j] : problem.lo[j];
    }
    return finish(problem, std::move(w));
  }
  return solve_simplex(problem);
}

Solution solve_bruteforce(const BoxEqualityLP& problem) {
  problem.validate();
  const std::size_t n = problem.n_vars();
  if (n > kBruteForceMaxVars) {
    throw ParameterError("lp::solve_bruteforce: at most " +
                         std::to_string(kBruteForceMaxVars) + " variables");
  }
  const ReducedSystem sys = reduce_rows(problem);
  if (!sys.consistent) return Solution{};
  const std::size_t r = sys.rows.size();

  Solution best;
  double best_obj = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> basic(r);
  std::iota(basic.begin(), basic.end(), 0);
  do {
    std::vector<bool> is_basic(n, false);
    for (std::size_t j : basic) is_basic[j] = true;
    std::vector<std::size_t> nonbasic;
    for (std::size_t j = 0; j < n; ++j) {
      if (!is_basic[j]) nonbasic.push_back(j);
    }
    const std::size_t patterns = std::size_t{1} << nonbasic.size();
    for (std::size_t mask = 0; mask < patterns; ++mask) {
      std::vector<double> w(n, 0.0);
      for (std::size_t k = 0; k < nonbasic.size(); ++k) {
        const std::size_t j = nonbasic[k];
        w[j] = (mask >> k) & 1U ? problem.hi[j] : problem.lo[j];
      }
      if (r > 0) {
        std::vector<std::vector<double>> mat(r, std::vector<double>(r));
        std::vector<double> y(sys.rhs);
        for (std::size_t i = 0; i < r; ++i) {
          for (std::size_t k = 0; k < r; ++k) mat[i][k] = sys.rows[i][basic[k]];
          for (std::size_t j : nonbasic) y[i] -= sys.rows[i][j] * w[j];
        }
        std::vector<double> xb;
        if (!solve_square(std::move(mat), std::move(y), xb)) continue;
        bool inside = true;
        for (std::size_t k = 0; k < r; ++k) {
          const std::size_t j = basic[k];
          if (xb[k] < problem.lo[j] - kFeasibilityTol ||
              xb[k] > problem.hi[j] + kFeasibilityTol) {
            inside = false;
            break;
          }
          w[j] = xb[k];
        }
        if (!inside) continue;
      }
      const double obj = dot(problem.c, w);
      if (obj < best_obj - 1e-15) {
        best_obj = obj;
        best.w = w;
        best.status = Status::Optimal;
      }
    }
  } while (r > 0 && next_combination(basic, n));

  if (!best.optimal()) return best;
  return finish(problem, std::move(best.w));
}

}  // namespace confope::lp
