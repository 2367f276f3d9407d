// Acceptance suite: prints one PASS/FAIL line per criterion, exits 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "confope/benchmarks.hpp"
#include "confope/confounded_model.hpp"
#include "confope/dataset.hpp"
#include "confope/experiments.hpp"
#include "confope/fqe_bound.hpp"
#include "confope/lp.hpp"
#include "confope/robust_bound.hpp"

namespace {

using namespace confope;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

EvaluationProblem population(const BenchmarkEnv& env, double p = 0.5) {
  return build_problem(env, DataSpec{}, p, env.default_horizon);
}

std::vector<BenchmarkEnv> all_envs() {
  std::vector<BenchmarkEnv> envs;
  for (const std::string& name : env_names()) envs.push_back(load_env(name));
  return envs;
}

// Random generators shared by criteria 4 and 6.
double uniform(std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::vector<double> simplex(std::mt19937_64& rng, std::size_t n) {
  std::vector<double> w(n);
  double s = 0.0;
  for (double& v : w) {
    v = -std::log(uniform(rng, 1e-3, 1.0));
    s += v;
  }
  for (double& v : w) v /= s;
  return w;
}

ConfoundedMDP random_model(std::mt19937_64& rng, std::size_t nx, std::size_t na) {
  Tensor4 tu({nx, 2, na, nx});
  Tensor3 bu({nx, 2, na});
  Tensor3 r({nx, na, nx});
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t u = 0; u < 2; ++u) {
      const auto b = simplex(rng, na);
      for (std::size_t a = 0; a < na; ++a) {
        bu(x, u, a) = b[a];
        const auto row = simplex(rng, nx);
        for (std::size_t y = 0; y < nx; ++y) tu(x, u, a, y) = row[y];
      }
    }
    for (std::size_t a = 0; a < na; ++a) {
      for (std::size_t y = 0; y < nx; ++y) r(x, a, y) = uniform(rng, -1.0, 1.0);
    }
  }
  return ConfoundedMDP(tu, bu, uniform(rng, 0.2, 0.8), r, simplex(rng, nx), uniform(rng, 0.8, 1.0));
}

PolicyTable random_policy(std::mt19937_64& rng, std::size_t nx, std::size_t na) {
  Matrix m({nx, na});
  for (std::size_t x = 0; x < nx; ++x) {
    const auto row = simplex(rng, na);
    for (std::size_t a = 0; a < na; ++a) m(x, a) = row[a];
  }
  return PolicyTable(m);
}

EvaluationProblem problem_for(const ConfoundedMDP& cm, const PolicyTable& pi_e) {
  return EvaluationProblem{population_model(cm), cm.rewards(), cm.initial_dist(), cm.discount(),
                           pi_e};
}

// 1. Collapse identities.
Outcome collapse() {
  Outcome o;
  for (const BenchmarkEnv& env : all_envs()) {
    for (double p : {0.3, 0.5}) {
      const EvaluationProblem prob = population(env, p);
      const std::size_t T = env.default_horizon;
      const double nominal = nominal_fqe(prob, T).expected_lower;
      auto check = [&](double v, const std::string& what) {
        o.require(std::abs(v - nominal) <= 1e-9, env.name + ": " + what + " differs from nominal");
      };
      for (double delta : {1.0, 2.0, 10.0}) {
        const SensitivityParams g1{1.0, delta, p};
        check(confounded_fqe(prob, g1, T).expected_lower, "fqe at Gamma=1");
        check(robust_value_iteration(prob, g1, T).bound.expected_lower, "robust at Gamma=1");
        check(single_step_bound(prob, g1, T).expected_lower, "single-step at Gamma=1");
      }
      check(naive_bound(prob, 1.0, T).expected_lower, "naive at Gamma=1");
      for (double gamma : {1.5, 4.0}) {
        check(robust_value_iteration(prob, {gamma, 1.0, p}, T).bound.expected_lower,
              "robust at Delta=1");
      }
    }
  }
  return o;
}

// 2. Monotonicity over the grid.
Outcome monotonicity() {
  Outcome o;
  const std::vector<double> grid{1.0, 1.5, 2.0, 4.0, 10.0};
  for (const BenchmarkEnv& env : all_envs()) {
    const EvaluationProblem prob = population(env);
    const std::size_t T = env.default_horizon;
    std::vector<double> fqe;
    std::vector<std::vector<double>> robust(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      fqe.push_back(confounded_fqe(prob, {grid[i], 1.0, 0.5}, T).expected_lower);
      for (double d : grid) {
        robust[i].push_back(robust_value_iteration(prob, {grid[i], d, 0.5}, T).bound.expected_lower);
      }
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (i > 0) o.require(fqe[i] <= fqe[i - 1] + 1e-9, env.name + ": fqe increases in Gamma");
      for (std::size_t j = 0; j < grid.size(); ++j) {
        if (i > 0) {
          o.require(robust[i][j] <= robust[i - 1][j] + 1e-9,
                    env.name + ": robust increases in Gamma at Delta=" + fmt("%g", grid[j]));
        }
        if (j > 0) {
          o.require(robust[i][j] <= robust[i][j - 1] + 1e-9,
                    env.name + ": robust increases in Delta at Gamma=" + fmt("%g", grid[i]));
        }
      }
    }
  }
  return o;
}

// 3. Dominance over confounded FQE.
Outcome dominance() {
  Outcome o;
  for (const BenchmarkEnv& env : all_envs()) {
    const EvaluationProblem prob = population(env);
    for (double g : {1.5, 2.0, 4.0, 10.0}) {
      const double fqe = confounded_fqe(prob, {g, 1.0, 0.5}, env.default_horizon).expected_lower;
      const double robust =
          robust_value_iteration(prob, {g, 1e6, 0.5}, env.default_horizon).bound.expected_lower;
      o.require(robust >= fqe - 1e-9, env.name + ": robust below fqe at Gamma=" + fmt("%g", g));
    }
  }
  return o;
}

// 4. Soundness on random confounded models.
Outcome soundness() {
  Outcome o;
  std::mt19937_64 rng(20240601);
  for (int i = 0; i < 20; ++i) {
    const std::size_t nx = 2 + static_cast<std::size_t>(i % 3);
    const std::size_t na = 2 + static_cast<std::size_t>(i % 2);
    const std::size_t T = 1 + static_cast<std::size_t>(i % 5);
    const ConfoundedMDP cm = random_model(rng, nx, na);
    const PolicyTable pe = random_policy(rng, nx, na);
    const EvaluationProblem prob = problem_for(cm, pe);
    const SensitivityAudit audit = audit_sensitivity(cm);
    const SensitivityParams params{audit.gamma, audit.delta, cm.p_u()};
    const double truth = true_policy_value(cm, pe, T);
    o.require(confounded_fqe(prob, params, T).expected_lower <= truth + 1e-9,
              "fqe above the true value on model " + std::to_string(i));
    o.require(robust_value_iteration(prob, params, T).bound.expected_lower <= truth + 1e-9,
              "robust above the true value on model " + std::to_string(i));
  }
  return o;
}

// 5. Single-iteration tightness plus the multi-horizon gridworld rows.
Outcome tightness() {
  Outcome o;
  for (const BenchmarkEnv& env : all_envs()) {
    const EvaluationProblem prob = population(env);
    for (double g : {2.0, 10.0}) {
      const SensitivityParams params{g, g, 0.5};
      const RobustRun run = robust_value_iteration(prob, params, 1);
      const TightnessReport rep = tightness_check(prob, params, 1, run.candidate,
                                                  run.bound.expected_lower);
      o.require(std::abs(rep.gap) <= 1e-8, env.name + ": T=1 gap " + fmt("%.3g", rep.gap));
    }
  }
  const BenchmarkEnv grid = load_env("ope-gridworld");
  const EvaluationProblem prob = population(grid);
  for (double g : {2.0, 10.0}) {
    const SensitivityParams params{g, g, 0.5};
    std::vector<double> gaps;
    for (std::size_t T : {28, 208, 508}) {
      const auto start = Clock::now();
      const RobustRun run = robust_value_iteration(prob, params, T);
      const TightnessReport rep = tightness_check(prob, params, T, run.candidate,
                                                  run.bound.expected_lower);
      gaps.push_back(rep.gap);
      std::printf("    ope-gridworld (%g,%g) T=%zu gap=%.3e (%.1fs)\n", g, g, T, rep.gap,
                  seconds_since(start));
    }
    o.require(gaps.back() < gaps.front(),
              "gridworld gap does not decrease from T=28 to T=508 at Gamma=Delta=" + fmt("%g", g));
  }
  return o;
}

// 6. Oracle equivalences.
double grid_oracle_2x2(const StateUncertaintyProblem& sp, double step) {
  const double w1 = sp.params.p;
  const double w0 = 1.0 - w1;
  auto box = [](double q, double rho) {
    return std::pair{q / (q + rho * (1.0 - q)), rho * q / (rho * q + 1.0 - q)};
  };
  auto inside = [](std::pair<double, double> b, double v) {
    return v >= b.first - 1e-12 && v <= b.second + 1e-12;
  };
  auto points = [&](std::pair<double, double> b) {
    std::vector<double> g{b.first, b.second};
    for (double v = 0.0; v <= 1.0 + 1e-12; v += step) g.push_back(v);
    return g;
  };
  const auto pb0 = box(sp.pi_hat[0], sp.params.gamma);
  const auto pb1 = box(sp.pi_hat[1], sp.params.gamma);
  double best = std::numeric_limits<double>::infinity();
  for (double t : points(pb0)) {
    const double s = (sp.pi_hat[0] - w0 * t) / w1;
    if (!inside(pb0, t) || !inside(pb0, s) || !inside(pb1, 1 - t) || !inside(pb1, 1 - s)) continue;
    const double tu[2][2] = {{t, 1 - t}, {s, 1 - s}};
    double total = 0.0;
    for (std::size_t a = 0; a < 2; ++a) {
      const auto tb = box(sp.p_hat(a, 1), sp.params.delta);
      double act = std::numeric_limits<double>::infinity();
      for (double q : points(tb)) {
        if (!inside(tb, q)) continue;
        const double q1 = (sp.pi_hat[a] * sp.p_hat(a, 1) - w0 * tu[0][a] * q) / (w1 * tu[1][a]);
        if (!inside(tb, q1)) continue;
        const double m = w0 * q + w1 * q1;
        act = std::min(act, (1 - m) * sp.continuation(a, 0) + m * sp.continuation(a, 1));
      }
      total += sp.pi_e[a] * act;
    }
    best = std::min(best, total);
  }
  return best;
}

Outcome oracles() {
  Outcome o;
  std::mt19937_64 rng(777);

  // (a) LP vs vertex enumeration.
  for (int i = 0; i < 200; ++i) {
    const std::size_t n = 1 + static_cast<std::size_t>(i % 6);
    const std::size_t m = std::min<std::size_t>(static_cast<std::size_t>(i % 3), n);
    lp::BoxEqualityLP prob{std::vector<double>(n), std::vector<double>(n), std::vector<double>(n),
                           Matrix({m, n}), std::vector<double>(m, 0.0)};
    std::vector<double> w0(n);
    for (std::size_t j = 0; j < n; ++j) {
      prob.c[j] = uniform(rng, -1, 1);
      prob.lo[j] = uniform(rng, -1, 1);
      prob.hi[j] = prob.lo[j] + uniform(rng, 0, 2);
      w0[j] = uniform(rng, prob.lo[j], prob.hi[j]);
    }
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t j = 0; j < n; ++j) {
        prob.A(r, j) = uniform(rng, -1, 1);
        prob.b[r] += prob.A(r, j) * w0[j];
      }
    }
    const lp::Solution fast = lp::solve(prob);
    const lp::Solution brute = lp::solve_bruteforce(prob);
    o.require(fast.optimal() && brute.optimal() &&
                  std::abs(fast.objective - brute.objective) <= 1e-8,
              "LP instance " + std::to_string(i) + " disagrees with vertex enumeration");
  }

  // (b) solve_state vs a 1e-3 grid.
  for (int i = 0; i < 10; ++i) {
    StateUncertaintyProblem sp;
    const double q = i == 0 ? 0.5 : uniform(rng, 0.2, 0.8);
    sp.pi_hat = {q, 1 - q};
    sp.p_hat = Matrix({2, 2});
    sp.continuation = Matrix({2, 2});
    for (std::size_t a = 0; a < 2; ++a) {
      const double ph = i == 0 ? 0.5 : uniform(rng, 0.2, 0.8);
      sp.p_hat(a, 0) = 1 - ph;
      sp.p_hat(a, 1) = ph;
      for (std::size_t x = 0; x < 2; ++x) {
        sp.continuation(a, x) = i == 0 ? (a == x ? 0.0 : 1.0) : uniform(rng, -1, 1);
      }
    }
    sp.supported = {true, true};
    const double pe = i == 0 ? 0.5 : uniform(rng);
    sp.pi_e = {pe, 1 - pe};
    sp.params = i == 0 ? SensitivityParams{2, 2, 0.5}
                       : SensitivityParams{uniform(rng, 1, 4), uniform(rng, 1, 4), uniform(rng, 0.2, 0.8)};
    const double solver = solve_state(sp).value;
    const double brute = grid_oracle_2x2(sp, 1e-3);
    o.require(std::abs(solver - brute) <= 2e-3 && solver <= brute + 1e-9,
              "solve_state instance " + std::to_string(i) + " off the grid oracle");
  }

  // (c) reweighting identity and (d) observable implications.
  for (int i = 0; i < 50; ++i) {
    const std::size_t nx = 2 + static_cast<std::size_t>(i % 3);
    const std::size_t na = 2 + static_cast<std::size_t>(i % 2);
    const ConfoundedMDP cm = random_model(rng, nx, na);
    Tensor3 f({nx, na, nx});
    for (double& v : f.flat()) v = uniform(rng, -5, 5);
    const TransitionFunction fn = [&](std::size_t x, std::size_t a, std::size_t y) {
      return f(x, a, y);
    };
    for (std::size_t x = 0; x < nx; ++x) {
      for (std::size_t a = 0; a < na; ++a) {
        double direct = 0.0;
        for (std::size_t u = 0; u < 2; ++u) {
          for (std::size_t y = 0; y < nx; ++y) direct += cm.weight(u) * cm.transition(x, u, a, y) * f(x, a, y);
        }
        o.require(std::abs(reweighted_conditional_mean(cm, fn, x, a) - direct) <= 1e-12,
                  "reweighting identity fails on model " + std::to_string(i));
      }
    }
    o.require(observable_implication_residual(cm) <= 1e-12,
              "observable implications fail on model " + std::to_string(i));
  }
  for (const BenchmarkEnv& env : all_envs()) {
    InjectionOptions opts;
    opts.horizon = env.default_horizon;
    const ConfoundedMDP cm = inject_confounding(env.mdp, env.pi_b, opts).model;
    o.require(observable_implication_residual(cm) <= 1e-12,
              "observable implications fail on injected " + env.name);
  }
  return o;
}

// 7. Qualitative crossing of the logging policy's value.
Outcome crossings() {
  Outcome o;
  const std::vector<double> gammas{1.1, 1.25, 1.5, 1.75, 2, 2.5, 3, 3.5, 4, 5, 6, 7, 8, 9, 10};
  auto first_cross = [&](const std::function<double(double)>& bound, double v_b) {
    for (double g : gammas) {
      if (bound(g) < v_b) return g;
    }
    return std::numeric_limits<double>::infinity();
  };
  for (const BenchmarkEnv& env : all_envs()) {
    const EvaluationProblem prob = population(env);
    const std::size_t T = env.default_horizon;
    const double v_b = behavior_value(prob, T);
    const double fqe_cross = first_cross(
        [&](double g) { return confounded_fqe(prob, {g, 1.0, 0.5}, T).expected_lower; }, v_b);
    std::printf("    %s: fqe crosses V_b at Gamma=%g", env.name.c_str(), fqe_cross);
    if (env.name == "ope-graph") {
      o.require(fqe_cross >= 4 && fqe_cross <= 9, "ope-graph fqe crossing outside [4, 9]");
    } else {
      o.require(fqe_cross < 3.5, env.name + " fqe crossing not below 3.5");
    }
    if (env.name == "toy") {
      const double robust_cross = first_cross(
          [&](double g) {
            return robust_value_iteration(prob, {g, 2.0, 0.5}, T).bound.expected_lower;
          },
          v_b);
      std::printf(", robust(Delta=2) at Gamma=%g", robust_cross);
      o.require(robust_cross > fqe_cross, "toy robust Delta=2 does not cross later than fqe");
    }
    std::printf("\n");
  }
  return o;
}

// 8. Horizon protocol on the transformed envs.
Outcome horizon_protocol() {
  Outcome o;
  const auto start = Clock::now();
  for (const BenchmarkEnv& env : all_envs()) {
    SweepSpec spec{steady_state_transform(env)};
    spec.methods = {Method::Robust};
    spec.gammas = {1.5, 2.0, 10.0};
    spec.deltas = {1e6};
    spec.horizon = 200;
    const auto env_start = Clock::now();
    const std::vector<BoundResult> rows = run_horizon(spec);
    std::printf("    %s: %zu rows in %.1fs\n", spec.env.name.c_str(), rows.size(),
                seconds_since(env_start));
    o.require(rows.size() == 600, spec.env.name + ": expected 600 rows");
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].gamma != rows[i - 1].gamma) continue;
      const double gap = rows[i].nominal_value - rows[i].bound;
      const double prev = rows[i - 1].nominal_value - rows[i - 1].bound;
      o.require(gap >= prev - 1e-9, spec.env.name + ": gap to nominal shrinks at t=" +
                                        std::to_string(rows[i].horizon) + ", Gamma=" +
                                        fmt("%g", rows[i].gamma));
    }
  }
  const double elapsed = seconds_since(start);
  o.require(elapsed < 600.0, "horizon protocol took " + fmt("%.0f", elapsed) + "s");
  return o;
}

// 9. Determinism.
Outcome determinism() {
  Outcome o;
  for (const BenchmarkEnv& env : all_envs()) {
    SweepSpec spec{env};
    spec.methods = {Method::Fqe, Method::Robust, Method::Naive};
    spec.gammas = {1.5, 4.0};
    spec.deltas = {2.0};
    spec.timing = false;
    std::ostringstream a;
    std::ostringstream b;
    write_csv(a, run_sweep(spec));
    write_csv(b, run_sweep(spec));
    o.require(a.str() == b.str(), env.name + ": sweep CSV differs between runs");

    const ConfoundedMDP cm = ConfoundedMDP::unconfounded(env.mdp, env.pi_b);
    std::ostringstream d1;
    std::ostringstream d2;
    write_dataset_csv(d1, simulate(cm, 200, env.default_horizon, 12345));
    write_dataset_csv(d2, simulate(cm, 200, env.default_horizon, 12345));
    o.require(d1.str() == d2.str(), env.name + ": datasets differ for a fixed seed");
  }
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {"collapse identities", collapse},
      {"monotonicity", monotonicity},
      {"dominance over confounded FQE", dominance},
      {"soundness", soundness},
      {"tightness", tightness},
      {"oracle equivalences", oracles},
      {"crossing of the logging value", crossings},
      {"horizon protocol", horizon_protocol},
      {"determinism", determinism},
  };
  int failures = 0;
  int index = 0;
  for (const Criterion& c : criteria) {
    ++index;
    const auto start = Clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    std::printf("%s %d %s (%.1fs)%s%s\n", out.pass ? "PASS" : "FAIL", index, c.name,
                seconds_since(start), out.pass ? "" : ": ", out.detail.c_str());
    std::fflush(stdout);
    if (!out.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
