#include <benchmark/benchmark.h>

#include <random>

#include "confope/benchmarks.hpp"
#include "confope/experiments.hpp"
#include "confope/fqe_bound.hpp"
#include "confope/lp.hpp"
#include "confope/robust_bound.hpp"

namespace {

using namespace confope;

void BM_KnapsackLP(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> c(n);
  std::vector<double> w(n);
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    c[j] = u(rng) - 0.5;
    w[j] = u(rng) + 0.01;
    sum += w[j];
  }
  for (double& v : w) v /= sum;
  const std::vector<double> lo(n, 0.75);
  const std::vector<double> hi(n, 1.5);
  for (auto _ : state) benchmark::DoNotOptimize(lp::solve_knapsack(c, w, lo, hi, 1.0));
}
BENCHMARK(BM_KnapsackLP)->Arg(4)->Arg(16)->Arg(64);

void BM_SimplexLP(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  lp::BoxEqualityLP prob{std::vector<double>(n), std::vector<double>(n, -1.0),
                         std::vector<double>(n, 1.0), Matrix({2, n}), {0.0, 0.0}};
  for (std::size_t j = 0; j < n; ++j) {
    prob.c[j] = u(rng);
    prob.A(0, j) = u(rng);
    prob.A(1, j) = u(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(lp::solve_simplex(prob));
}
BENCHMARK(BM_SimplexLP)->Arg(4)->Arg(16);

void BM_SolveState(benchmark::State& state) {
  const BenchmarkEnv env = load_env("ope-gridworld");
  const EvaluationProblem prob = build_problem(env, DataSpec{}, 0.5, env.default_horizon);
  const std::vector<double> v = nominal_fqe(prob, 3).v_lower.v;
  StateUncertaintyProblem sp;
  const std::size_t x = 6;
  const std::size_t na = prob.n_actions();
  const std::size_t nx = prob.n_states();
  sp.pi_hat.assign(prob.model.pi_hat.row(x).begin(), prob.model.pi_hat.row(x).end());
  sp.p_hat = Matrix({na, nx});
  sp.continuation = Matrix({na, nx});
  for (std::size_t a = 0; a < na; ++a) {
    sp.supported.push_back(prob.model.is_supported(x, a));
    sp.pi_e.push_back(prob.pi_e(x, a));
    for (std::size_t y = 0; y < nx; ++y) {
      sp.p_hat(a, y) = prob.model.p_hat(x, a, y);
      sp.continuation(a, y) = prob.continuation(x, a, y, v);
    }
  }
  sp.params = {static_cast<double>(state.range(0)), 2.0, 0.5};
  for (auto _ : state) benchmark::DoNotOptimize(solve_state(sp));
}
BENCHMARK(BM_SolveState)->Arg(2)->Arg(10);

void BM_ConfoundedFqe(benchmark::State& state) {
  const BenchmarkEnv env = load_env("ope-mc");
  const EvaluationProblem prob = build_problem(env, DataSpec{}, 0.5, env.default_horizon);
  for (auto _ : state) {
    benchmark::DoNotOptimize(confounded_fqe(prob, {2.0, 1.0, 0.5}, env.default_horizon));
  }
}
BENCHMARK(BM_ConfoundedFqe);

void BM_RobustValueIteration(benchmark::State& state) {
  const BenchmarkEnv env = load_env("toy");
  const EvaluationProblem prob = build_problem(env, DataSpec{}, 0.5, env.default_horizon);
  for (auto _ : state) {
    benchmark::DoNotOptimize(robust_value_iteration(prob, {2.0, 2.0, 0.5}, env.default_horizon));
  }
}
BENCHMARK(BM_RobustValueIteration)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
