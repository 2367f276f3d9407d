#include "confope/robust_bound.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "confope/error.hpp"
#include "confope/lp.hpp"

namespace confope {

namespace {

constexpr std::size_t kU = kNumConfounderValues;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kGridCells = 128;
constexpr std::size_t kLineSamples = 8;
constexpr int kGoldenIters = 80;
constexpr int kMaxSweeps = 60;
constexpr std::size_t kRefinedSeeds = 3;
constexpr std::size_t kMaxVertexActions = 8;

struct ActionSetup {
  bool supported = false;
  double pi_hat = 0.0;
  double weight = 0.0;  // pi_e(a|x)
  double lo = 0.0;      // range of pi_b(a|x,0)
  double hi = 0.0;
  std::vector<std::size_t> support;
  std::vector<double> p_hat;
  std::vector<double> box_lo;
  std::vector<double> box_hi;
  std::vector<double> y;
  double fallback = 0.0;
  std::size_t fallback_state = 0;
};

/// Per-action inner LP for a fixed pi_b(a|x,0) and the induced pi_b(a|x,1).
class StateSolver {
 public:
  explicit StateSolver(const StateUncertaintyProblem& prob) : prob_(prob) {
    const std::size_t na = prob.n_actions();
    const std::size_t nx = prob.n_states();
    const double p = prob.params.p;
    w0_ = 1.0 - p;
    w1_ = p;
    actions_.resize(na);
    for (std::size_t a = 0; a < na; ++a) {
      ActionSetup& s = actions_[a];
      s.weight = prob.pi_e[a];
      s.pi_hat = prob.pi_hat[a];
      s.supported = prob.supported[a] && s.pi_hat > 0.0;
      auto yrow = prob.continuation.row(a);
      s.fallback = kInf;
      for (std::size_t y = 0; y < nx; ++y) {
        if (yrow[y] < s.fallback) {
          s.fallback = yrow[y];
          s.fallback_state = y;
        }
      }
      if (!s.supported) continue;
      auto prow = prob.p_hat.row(a);
      for (std::size_t y = 0; y < nx; ++y) {
        if (prow[y] <= 0.0) continue;
        s.support.push_back(y);
        s.p_hat.push_back(prow[y]);
        const Interval iv = odds_interval(prow[y], prob.params.delta);
        s.box_lo.push_back(iv.lo);
        s.box_hi.push_back(iv.hi);
        s.y.push_back(yrow[y]);
      }
      const Interval pol = odds_interval(s.pi_hat, prob.params.gamma);
      if (w0_ > 0.0 && w1_ > 0.0) {
        s.lo = std::max(pol.lo, (s.pi_hat - w1_ * pol.hi) / w0_);
        s.hi = std::min(pol.hi, (s.pi_hat - w1_ * pol.lo) / w0_);
      } else {
        s.lo = s.hi = s.pi_hat;
      }
      s.lo = std::min(s.lo, s.pi_hat);
      s.hi = std::max(s.hi, s.pi_hat);
    }
  }

  std::size_t n_actions() const { return actions_.size(); }
  const ActionSetup& action(std::size_t a) const { return actions_[a]; }
  std::size_t evaluations() const { return evaluations_; }

  /// Unweighted worst-case expected continuation for action a when
  /// pi_b(a|x,0) = t. Optionally writes the minimizing P(.|x,u,a) on the
  /// support.
  double action_value(std::size_t a, double t, std::vector<double>* q0 = nullptr,
                      std::vector<double>* q1 = nullptr) const {
    const ActionSetup& s = actions_[a];
    ++evaluations_;
    const double pi = s.pi_hat;
    double tu = std::clamp(t, 0.0, 1.0);
    double su = (pi - w0_ * tu) / w1_;
    if (su < -1e-12) return kInf;
    su = std::max(su, 0.0);
    const bool free0 = w0_ * tu <= w1_ * su;
    const double tf = free0 ? tu : su;
    const double td = free0 ? su : tu;
    const double wf = free0 ? w0_ : w1_;
    const double jf = wf * tf;
    const double jd = (free0 ? w1_ : w0_) * td;
    if (!(td > 0.0) || !(jd > 0.0)) return kInf;
    const std::size_t n = s.support.size();
    lo_.resize(n);
    hi_.resize(n);
    cost_.resize(n);
    ones_.assign(n, 1.0);
    double constant = 0.0;
    const double slope = wf * (1.0 - tf / td);
    for (std::size_t i = 0; i < n; ++i) {
      const double joint = pi * s.p_hat[i];
      double lo = s.box_lo[i];
      double hi = s.box_hi[i];
      if (jf > 0.0) {
        lo = std::max(lo, (joint - jd * s.box_hi[i]) / jf);
        hi = std::min(hi, (joint - jd * s.box_lo[i]) / jf);
      }
      if (lo > hi) {
        if (lo - hi > 1e-9) return kInf;
        lo = hi = 0.5 * (lo + hi);
      }
      lo_[i] = lo;
      hi_[i] = hi;
      cost_[i] = slope * s.y[i];
      constant += joint * s.y[i] / td;
    }
    lp::Solution sol = lp::solve_knapsack(cost_, ones_, lo_, hi_, 1.0);
    if (!sol.optimal()) return kInf;
    if (q0 && q1) {
      std::vector<double>& qf = free0 ? *q0 : *q1;
      std::vector<double>& qd = free0 ? *q1 : *q0;
      qf = sol.w;
      qd.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        qd[i] = std::max(0.0, (pi * s.p_hat[i] - jf * sol.w[i]) / jd);
      }
    }
    return sol.objective + constant;
  }

  /// pi_e-weighted contribution of action a.
  double contribution(std::size_t a, double t) const {
    const ActionSetup& s = actions_[a];
    if (!s.supported) return s.weight * s.fallback;
    if (s.weight == 0.0) return 0.0;
    return s.weight * action_value(a, t);
  }

  double total(const std::vector<double>& t) const {
    double acc = 0.0;
    for (std::size_t a = 0; a < actions_.size(); ++a) {
      const double c = contribution(a, t[a]);
      if (c == kInf) return kInf;
      acc += c;
    }
    return acc;
  }

  double w0() const { return w0_; }
  double w1() const { return w1_; }

 private:
  const StateUncertaintyProblem& prob_;
  std::vector<ActionSetup> actions_;
  double w0_ = 0.5;
  double w1_ = 0.5;
  mutable std::size_t evaluations_ = 0;
  mutable std::vector<double> lo_;
  mutable std::vector<double> hi_;
  mutable std::vector<double> cost_;
  mutable std::vector<double> ones_;
};

struct Point {
  std::vector<double> t;
  double value = kInf;
};

/// Grid dynamic program over the free actions: each free action a takes
/// pi_b(a|x,0) = lo_a + j_a h with sum_a j_a = kGridCells.
Point grid_seed(const StateSolver& solver, const std::vector<std::size_t>& free,
                const std::vector<double>& base, double slack) {
  Point out;
  if (slack <= 0.0) return out;
  const double h = slack / static_cast<double>(kGridCells);
  const std::size_t nf = free.size();
  std::vector<std::vector<double>> g(nf);
  for (std::size_t k = 0; k < nf; ++k) {
    const ActionSetup& s = solver.action(free[k]);
    const std::size_t cells = std::min<std::size_t>(
        kGridCells, static_cast<std::size_t>(std::floor((s.hi - s.lo) / h + 1e-9)));
    g[k].resize(cells + 1);
    for (std::size_t j = 0; j <= cells; ++j) {
      g[k][j] = solver.contribution(free[k], s.lo + static_cast<double>(j) * h);
    }
  }
  const std::size_t B = kGridCells;
  std::vector<std::vector<double>> dp(nf + 1, std::vector<double>(B + 1, kInf));
  std::vector<std::vector<std::size_t>> choice(nf + 1, std::vector<std::size_t>(B + 1, 0));
  dp[0][0] = 0.0;
  for (std::size_t k = 0; k < nf; ++k) {
    for (std::size_t used = 0; used <= B; ++used) {
      if (dp[k][used] == kInf) continue;
      for (std::size_t j = 0; j < g[k].size() && used + j <= B; ++j) {
        const double v = dp[k][used] + g[k][j];
        if (v < dp[k + 1][used + j]) {
          dp[k + 1][used + j] = v;
          choice[k + 1][used + j] = j;
        }
      }
    }
  }
  if (dp[nf][B] == kInf) return out;
  out.t = base;
  std::size_t used = B;
  for (std::size_t k = nf; k-- > 0;) {
    const std::size_t j = choice[k + 1][used];
    const ActionSetup& s = solver.action(free[k]);
    out.t[free[k]] = s.lo + static_cast<double>(j) * h;
    used -= j;
  }
  // Put the rounding residue on the action with the most room.
  double sum = std::accumulate(out.t.begin(), out.t.end(), 0.0);
  for (std::size_t k = 0; k < nf && std::abs(sum - 1.0) > 0.0; ++k) {
    const ActionSetup& s = solver.action(free[k]);
    const double target = std::clamp(out.t[free[k]] + (1.0 - sum), s.lo, s.hi);
    sum += target - out.t[free[k]];
    out.t[free[k]] = target;
  }
  out.value = solver.total(out.t);
  return out;
}

/// Vertices of {sum t = 1, lo <= t <= hi} restricted to the free actions.
std::vector<Point> vertex_seeds(const StateSolver& solver, const std::vector<std::size_t>& free,
                                const std::vector<double>& base) {
  std::vector<Point> out;
  const std::size_t nf = free.size();
  if (nf < 2 || nf > kMaxVertexActions) return out;
  double fixed_mass = 0.0;
  for (std::size_t a = 0; a < base.size(); ++a) {
    if (std::find(free.begin(), free.end(), a) == free.end()) fixed_mass += base[a];
  }
  for (std::size_t pivot = 0; pivot < nf; ++pivot) {
    const std::size_t patterns = std::size_t{1} << (nf - 1);
    for (std::size_t mask = 0; mask < patterns; ++mask) {
      std::vector<double> t = base;
      double mass = fixed_mass;
      std::size_t bit = 0;
      for (std::size_t k = 0; k < nf; ++k) {
        if (k == pivot) continue;
        const ActionSetup& s = solver.action(free[k]);
        t[free[k]] = (mask >> bit) & 1U ? s.hi : s.lo;
        mass += t[free[k]];
        ++bit;
      }
      const ActionSetup& ps = solver.action(free[pivot]);
      const double rest = 1.0 - mass;
      if (rest < ps.lo - 1e-13 || rest > ps.hi + 1e-13) continue;
      t[free[pivot]] = std::clamp(rest, ps.lo, ps.hi);
      Point p{std::move(t), 0.0};
      p.value = solver.total(p.t);
      out.push_back(std::move(p));
    }
  }
  return out;
}

/// Minimizes g over [a, b] starting from samples; returns (argmin, min).
template <typename F>
std::pair<double, double> line_minimize(F g, double a, double b, double current_value) {
  std::pair<double, double> best{0.0, current_value};
  std::array<double, kLineSamples + 1> xs{};
  std::array<double, kLineSamples + 1> vs{};
  std::size_t arg = 0;
  for (std::size_t k = 0; k <= kLineSamples; ++k) {
    xs[k] = a + (b - a) * static_cast<double>(k) / static_cast<double>(kLineSamples);
    vs[k] = g(xs[k]);
    if (vs[k] < vs[arg]) arg = k;
  }
  if (vs[arg] < best.second) best = {xs[arg], vs[arg]};
  // Golden section on the bracket around the best sample.
  double lo = xs[arg == 0 ? 0 : arg - 1];
  double hi = xs[arg == kLineSamples ? kLineSamples : arg + 1];
  constexpr double kPhi = 0.6180339887498949;
  double x1 = hi - kPhi * (hi - lo);
  double x2 = lo + kPhi * (hi - lo);
  double f1 = g(x1);
  double f2 = g(x2);
  const double stop = 1e-15 * std::max(1.0, std::abs(b - a));
  for (int it = 0; it < kGoldenIters && hi - lo > stop; ++it) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kPhi * (hi - lo);
      f1 = g(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kPhi * (hi - lo);
      f2 = g(x2);
    }
  }
  if (f1 < best.second) best = {x1, f1};
  if (f2 < best.second) best = {x2, f2};
  return best;
}

/// Pairwise mass transfers between free actions until no transfer helps.
void refine(const StateSolver& solver, const std::vector<std::size_t>& free, Point& point) {
  const std::size_t nf = free.size();
  std::vector<double> contrib(solver.n_actions(), 0.0);
  for (std::size_t a = 0; a < solver.n_actions(); ++a) contrib[a] = solver.contribution(a, point.t[a]);
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool improved = false;
    for (std::size_t ii = 0; ii < nf; ++ii) {
      for (std::size_t jj = ii + 1; jj < nf; ++jj) {
        const std::size_t i = free[ii];
        const std::size_t j = free[jj];
        const ActionSetup& si = solver.action(i);
        const ActionSetup& sj = solver.action(j);
        if (si.weight == 0.0 && sj.weight == 0.0) continue;
        const double ti = point.t[i];
        const double tj = point.t[j];
        const double dmin = std::max(si.lo - ti, tj - sj.hi);
        const double dmax = std::min(si.hi - ti, tj - sj.lo);
        if (!(dmax - dmin > 1e-15)) continue;
        auto g = [&](double d) {
          return solver.contribution(i, ti + d) + solver.contribution(j, tj - d);
        };
        const double here = contrib[i] + contrib[j];
        auto [d, v] = line_minimize(g, dmin, dmax, here);
        if (v < here - 1e-15 * std::max(1.0, std::abs(here))) {
          point.t[i] = std::clamp(ti + d, si.lo, si.hi);
          point.t[j] = std::clamp(tj - d, sj.lo, sj.hi);
          contrib[i] = solver.contribution(i, point.t[i]);
          contrib[j] = solver.contribution(j, point.t[j]);
          improved = true;
        }
      }
    }
    if (!improved) break;
  }
  point.value = std::accumulate(contrib.begin(), contrib.end(), 0.0);
}

StateSolution nominal_solution(const StateUncertaintyProblem& prob) {
  const std::size_t na = prob.n_actions();
  const std::size_t nx = prob.n_states();
  StateSolution sol;
  sol.behavior_u = Matrix({kU, na});
  sol.transitions_u = Tensor3({kU, na, nx});
  const bool visited =
      std::any_of(prob.supported.begin(), prob.supported.end(), [](bool b) { return b; });
  for (std::size_t a = 0; a < na; ++a) {
    auto y = prob.continuation.row(a);
    double value = 0.0;
    if (prob.supported[a] && prob.pi_hat[a] > 0.0) {
      for (std::size_t x = 0; x < nx; ++x) {
        const double p = prob.p_hat(a, x);
        if (p > 0.0) value += p * y[x];
        for (std::size_t u = 0; u < kU; ++u) sol.transitions_u(u, a, x) = p;
      }
    } else {
      const std::size_t worst =
          static_cast<std::size_t>(std::min_element(y.begin(), y.end()) - y.begin());
      value = y[worst];
      for (std::size_t u = 0; u < kU; ++u) sol.transitions_u(u, a, worst) = 1.0;
    }
    for (std::size_t u = 0; u < kU; ++u) {
      sol.behavior_u(u, a) = visited ? prob.pi_hat[a] : 1.0 / static_cast<double>(na);
    }
    sol.value += prob.pi_e[a] * value;
  }
  return sol;
}

void check_state_problem(const StateUncertaintyProblem& prob) {
  const std::size_t na = prob.n_actions();
  if (prob.p_hat.extent(0) != na || prob.continuation.shape() != prob.p_hat.shape() ||
      prob.supported.size() != na || prob.pi_e.size() != na) {
    throw DimensionError("StateUncertaintyProblem: inconsistent shapes");
  }
  prob.params.validate();
}

}  // namespace

double state_objective_at(const StateUncertaintyProblem& problem,
                          const std::vector<double>& behavior_u0) {
  check_state_problem(problem);
  StateSolver solver(problem);
  for (std::size_t a = 0; a < solver.n_actions(); ++a) {
    const ActionSetup& s = solver.action(a);
    if (s.supported && (behavior_u0[a] < s.lo - 1e-12 || behavior_u0[a] > s.hi + 1e-12)) {
      return kInf;
    }
  }
  return solver.total(behavior_u0);
}

StateSolution solve_state(const StateUncertaintyProblem& prob) {
  check_state_problem(prob);
  const SensitivityParams& params = prob.params;
  const bool visited =
      std::any_of(prob.supported.begin(), prob.supported.end(), [](bool b) { return b; });
  if (!visited || params.p <= 0.0 || params.p >= 1.0 || params.gamma == 1.0 ||
      params.delta == 1.0) {
    return nominal_solution(prob);
  }

  const std::size_t na = prob.n_actions();
  const std::size_t nx = prob.n_states();
  StateSolver solver(prob);

  std::vector<double> nominal(na, 0.0);
  std::vector<std::size_t> free;
  double slack = 1.0;
  for (std::size_t a = 0; a < na; ++a) {
    const ActionSetup& s = solver.action(a);
    nominal[a] = s.supported ? s.pi_hat : 0.0;
    if (s.supported && s.hi - s.lo > 1e-14) {
      free.push_back(a);
      slack -= s.lo;
    } else {
      slack -= nominal[a];
    }
  }

  std::vector<Point> seeds;
  seeds.push_back(Point{nominal, solver.total(nominal)});
  if (free.size() >= 2) {
    std::vector<double> base = nominal;
    Point grid = grid_seed(solver, free, base, slack);
    if (grid.value < kInf) seeds.push_back(std::move(grid));
    for (Point& v : vertex_seeds(solver, free, base)) {
      if (v.value < kInf) seeds.push_back(std::move(v));
    }
  }
  std::stable_sort(seeds.begin(), seeds.end(),
                   [](const Point& a, const Point& b) { return a.value < b.value; });

  // Always refine the nominal point as well as the best few seeds.
  std::vector<Point> refined;
  std::vector<std::size_t> picks;
  for (std::size_t k = 0; k < seeds.size() && picks.size() < kRefinedSeeds; ++k) picks.push_back(k);
  auto has_nominal = std::any_of(picks.begin(), picks.end(), [&](std::size_t k) {
    return seeds[k].t == nominal;
  });
  if (!has_nominal) {
    for (std::size_t k = 0; k < seeds.size(); ++k) {
      if (seeds[k].t == nominal) picks.push_back(k);
    }
  }
  for (std::size_t k : picks) {
    Point p = seeds[k];
    if (free.size() >= 2) refine(solver, free, p);
    refined.push_back(std::move(p));
  }
  auto best_it = std::min_element(refined.begin(), refined.end(),
                                  [](const Point& a, const Point& b) { return a.value < b.value; });
  auto worst_it = std::max_element(refined.begin(), refined.end(),
                                   [](const Point& a, const Point& b) { return a.value < b.value; });
  const Point& best = *best_it;

  StateSolution sol;
  sol.value = best.value;
  sol.restart_dispersion = worst_it->value - best_it->value;
  sol.behavior_u = Matrix({kU, na});
  sol.transitions_u = Tensor3({kU, na, nx});
  std::vector<double> q0;
  std::vector<double> q1;
  for (std::size_t a = 0; a < na; ++a) {
    const ActionSetup& s = solver.action(a);
    if (!s.supported) {
      for (std::size_t u = 0; u < kU; ++u) {
        sol.behavior_u(u, a) = 0.0;
        sol.transitions_u(u, a, s.fallback_state) = 1.0;
      }
      continue;
    }
    const double t = best.t[a];
    sol.behavior_u(0, a) = t;
    sol.behavior_u(1, a) = std::max(0.0, (s.pi_hat - solver.w0() * t) / solver.w1());
    const double v = solver.action_value(a, t, &q0, &q1);
    if (v == kInf) throw Error("solve_state: chosen point became infeasible");
    for (std::size_t i = 0; i < s.support.size(); ++i) {
      sol.transitions_u(0, a, s.support[i]) = q0[i];
      sol.transitions_u(1, a, s.support[i]) = q1[i];
    }
  }
  sol.evaluations = solver.evaluations();
  return sol;
}

namespace {

StateUncertaintyProblem state_problem(const EvaluationProblem& problem,
                                      const SensitivityParams& params, std::size_t x,
                                      const std::vector<double>& v) {
  const std::size_t na = problem.n_actions();
  const std::size_t nx = problem.n_states();
  StateUncertaintyProblem sp;
  sp.pi_hat.assign(problem.model.pi_hat.row(x).begin(), problem.model.pi_hat.row(x).end());
  sp.p_hat = Matrix({na, nx});
  sp.continuation = Matrix({na, nx});
  sp.supported.assign(na, false);
  sp.pi_e.assign(problem.pi_e.row(x).begin(), problem.pi_e.row(x).end());
  sp.params = params;
  for (std::size_t a = 0; a < na; ++a) {
    sp.supported[a] = problem.model.is_supported(x, a);
    for (std::size_t y = 0; y < nx; ++y) {
      sp.p_hat(a, y) = problem.model.p_hat(x, a, y);
      sp.continuation(a, y) = problem.continuation(x, a, y, v);
    }
  }
  return sp;
}

void count_fallbacks(const EvaluationProblem& problem, std::size_t x, BoundDiagnostics& diag) {
  for (std::size_t a = 0; a < problem.n_actions(); ++a) {
    if (problem.pi_e(x, a) > 0.0 &&
        (!problem.model.is_supported(x, a) || problem.model.pi_hat(x, a) <= 0.0)) {
      ++diag.unsupported_fallbacks;
    }
  }
}

}  // namespace

RobustRun robust_value_iteration(const EvaluationProblem& problem,
                                 const SensitivityParams& params, std::size_t horizon) {
  problem.validate();
  params.validate();
  if (horizon == 0) throw ParameterError("robust_value_iteration: horizon must be >= 1");
  const std::size_t nx = problem.n_states();
  const std::size_t na = problem.n_actions();
  RobustBoundResult res;
  res.v_lower = StateValues{std::vector<double>(nx, 0.0), 0};
  res.expected_by_horizon.push_back(0.0);
  std::vector<StateSolution> last(nx);
  for (std::size_t k = 1; k <= horizon; ++k) {
    std::vector<double> next(nx, 0.0);
    for (std::size_t x = 0; x < nx; ++x) {
      StateSolution sol = solve_state(state_problem(problem, params, x, res.v_lower.v));
      next[x] = sol.value;
      res.diagnostics.inner_evaluations += sol.evaluations;
      res.diagnostics.restart_dispersion =
          std::max(res.diagnostics.restart_dispersion, sol.restart_dispersion);
      count_fallbacks(problem, x, res.diagnostics);
      if (k == horizon) last[x] = std::move(sol);
    }
    res.v_lower = StateValues{std::move(next), k};
    res.expected_by_horizon.push_back(expected_under(problem.initial, res.v_lower.v));
  }
  res.expected_lower = res.expected_by_horizon.back();

  Tensor4 tu({nx, kU, na, nx});
  Tensor3 bu({nx, kU, na});
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t u = 0; u < kU; ++u) {
      for (std::size_t a = 0; a < na; ++a) {
        bu(x, u, a) = last[x].behavior_u(u, a);
        for (std::size_t y = 0; y < nx; ++y) tu(x, u, a, y) = last[x].transitions_u(u, a, y);
      }
    }
  }
  ConfoundedMDP candidate(std::move(tu), std::move(bu), params.p, problem.rewards,
                          problem.initial, problem.discount);
  return RobustRun{std::move(res), std::move(candidate)};
}

RobustBoundResult single_step_bound(const EvaluationProblem& problem,
                                    const SensitivityParams& params, std::size_t horizon) {
  problem.validate();
  params.validate();
  if (horizon == 0) throw ParameterError("single_step_bound: horizon must be >= 1");
  const std::size_t nx = problem.n_states();
  FqeBoundResult nominal = nominal_fqe(problem, horizon - 1);
  RobustBoundResult res;
  res.diagnostics = nominal.diagnostics;
  std::vector<double> v(nx, 0.0);
  for (std::size_t x = 0; x < nx; ++x) {
    StateSolution sol = solve_state(state_problem(problem, params, x, nominal.v_lower.v));
    v[x] = sol.value;
    res.diagnostics.inner_evaluations += sol.evaluations;
    res.diagnostics.restart_dispersion =
        std::max(res.diagnostics.restart_dispersion, sol.restart_dispersion);
    count_fallbacks(problem, x, res.diagnostics);
  }
  res.v_lower = StateValues{std::move(v), horizon};
  res.expected_lower = expected_under(problem.initial, res.v_lower.v);
  res.expected_by_horizon = {0.0, res.expected_lower};
  return res;
}

std::vector<std::string> candidate_violations(const EvaluationProblem& problem,
                                              const SensitivityParams& params,
                                              const ConfoundedMDP& candidate, double tol) {
  std::vector<std::string> out;
  const std::size_t nx = problem.n_states();
  const std::size_t na = problem.n_actions();
  if (candidate.n_states() != nx || candidate.n_actions() != na) {
    out.push_back("candidate dimensions differ from the observed model");
    return out;
  }
  if (candidate.p_u() != params.p) out.push_back("p(u=1) differs from the sensitivity parameter");
  auto report = [&](const std::string& what, std::size_t x, std::size_t a, double amount) {
    std::ostringstream msg;
    msg << what << " at x=" << x << " a=" << a << " (" << amount << ")";
    out.push_back(msg.str());
  };
  for (std::size_t x = 0; x < nx; ++x) {
    if (!problem.model.state_visited(x)) continue;
    for (std::size_t a = 0; a < na; ++a) {
      const double ph = problem.model.pi_hat(x, a);
      double mix = 0.0;
      for (std::size_t u = 0; u < kU; ++u) {
        const double pu = candidate.behavior(x, u, a);
        mix += candidate.weight(u) * pu;
        if (ph > 0.0 && ph < 1.0) {
          const double ratio = odds_ratio(pu, ph);
          const double excess = std::max(ratio, 1.0 / ratio) - params.gamma;
          if (!(excess <= tol)) report("policy odds ratio exceeds Gamma", x, a, excess);
        }
      }
      if (std::abs(mix - ph) > tol) report("behavior mixture differs from pi_hat", x, a, mix - ph);
      if (!problem.model.is_supported(x, a) || ph <= 0.0) continue;
      for (std::size_t y = 0; y < nx; ++y) {
        const double p = problem.model.p_hat(x, a, y);
        double joint = 0.0;
        for (std::size_t u = 0; u < kU; ++u) {
          const double q = candidate.transition(x, u, a, y);
          joint += candidate.weight(u) * candidate.behavior(x, u, a) * q;
          if (p <= 0.0) {
            if (q > tol) report("transition leaves the observed support", x, a, q);
          } else if (p < 1.0) {
            const double ratio = odds_ratio(q, p);
            const double excess = std::max(ratio, 1.0 / ratio) - params.delta;
            if (!(excess <= tol)) report("transition odds ratio exceeds Delta", x, a, excess);
          }
        }
        if (std::abs(joint - ph * p) > tol) {
          report("joint mass differs from pi_hat * P_hat", x, a, joint - ph * p);
        }
      }
    }
  }
  return out;
}

TightnessReport tightness_check(const EvaluationProblem& problem,
                                const SensitivityParams& params, std::size_t horizon,
                                const ConfoundedMDP& candidate, double bound) {
  const std::vector<std::string> bad = candidate_violations(problem, params, candidate);
  if (!bad.empty()) {
    std::string msg = "tightness_check: invalid candidate:";
    for (const std::string& b : bad) msg += "\n  " + b;
    throw ValidationError(msg);
  }
  TightnessReport rep;
  rep.bound = bound;
  rep.candidate_value = true_policy_value(candidate, problem.pi_e, horizon);
  rep.gap = rep.candidate_value - bound;
  return rep;
}

}  // namespace confope
