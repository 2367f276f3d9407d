#include <doctest.h>

#include <cmath>
#include <functional>

#include "confope/benchmarks.hpp"
#include "confope/error.hpp"
#include "support.hpp"

using namespace confope;

namespace {

TabularMDP constant_reward_mdp(std::size_t nx, std::size_t na, double reward, double discount) {
  Tensor3 p({nx, na, nx});
  Tensor3 r({nx, na, nx}, reward);
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t a = 0; a < na; ++a) p(x, a, (x + a) % nx) = 1.0;
  }
  std::vector<double> init(nx, 1.0 / static_cast<double>(nx));
  return TabularMDP(std::move(p), std::move(r), std::move(init), discount);
}

/// Expected discounted return by explicit enumeration of every trajectory.
double enumerate_trajectories(const TabularMDP& mdp, const PolicyTable& pi, std::size_t T) {
  const std::size_t nx = mdp.n_states();
  const std::size_t na = mdp.n_actions();
  double total = 0.0;
  std::function<void(std::size_t, std::size_t, double, double, double)> walk =
      [&](std::size_t x, std::size_t t, double prob, double ret, double disc) {
        if (t == T) {
          total += prob * ret;
          return;
        }
        for (std::size_t a = 0; a < na; ++a) {
          for (std::size_t y = 0; y < nx; ++y) {
            const double step = pi(x, a) * mdp.transitions()(x, a, y);
            if (step == 0.0) continue;
            walk(y, t + 1, prob * step, ret + disc * mdp.reward(x, a, y), disc * mdp.discount());
          }
        }
      };
  for (std::size_t x = 0; x < nx; ++x) {
    if (mdp.initial_dist()[x] > 0.0) walk(x, 0, mdp.initial_dist()[x], 0.0, 1.0);
  }
  return total;
}

}  // namespace

TEST_CASE("bellman_apply with zero continuation and unit reward gives one") {
  TabularMDP mdp = constant_reward_mdp(3, 2, 1.0, 0.9);
  ActionValues q = bellman_apply(mdp, StateValues{std::vector<double>(3, 0.0), 0});
  CHECK(q.horizon == 1);
  for (double v : q.q.flat()) CHECK(v == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("bellman_apply with zero discount ignores the continuation") {
  std::mt19937_64 rng(11);
  TabularMDP mdp = testing::random_mdp(rng, 3, 2, 0.0, 0.0);
  ActionValues q = bellman_apply(mdp, StateValues{{5.0, -7.0, 100.0}, 3});
  CHECK(q.horizon == 4);
  for (std::size_t x = 0; x < 3; ++x) {
    for (std::size_t a = 0; a < 2; ++a) CHECK(q.q(x, a) == doctest::Approx(mdp.expected_reward(x, a)));
  }
}

TEST_CASE("bellman_apply on a two-state chain") {
  Tensor3 p({2, 1, 2});
  Tensor3 r({2, 1, 2});
  p(0, 0, 1) = 1.0;
  p(1, 0, 1) = 1.0;
  r(0, 0, 1) = 1.0;
  TabularMDP mdp(std::move(p), std::move(r), {1.0, 0.0}, 0.5);
  ActionValues q = bellman_apply(mdp, StateValues{{0.0, 0.0}, 0});
  CHECK(q.q(0, 0) == 1.0);
  CHECK(q.q(1, 0) == 0.0);
}

TEST_CASE("policy_value basics") {
  TabularMDP mdp = constant_reward_mdp(2, 2, 1.0, 0.5);
  PolicyTable pi = PolicyTable::uniform(2, 2);
  CHECK(policy_value(mdp, pi, 0).expected_value == 0.0);
  CHECK(policy_value(mdp, pi, 3).expected_value == doctest::Approx(1.75).epsilon(1e-15));
}

TEST_CASE("policy_value matches trajectory enumeration") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t nx = 2 + trial % 3;
    const std::size_t na = 1 + trial % 3;
    if (nx * na > 12) continue;
    TabularMDP mdp = testing::random_mdp(rng, nx, na, 0.3, testing::uniform(rng, 0.0, 1.0));
    PolicyTable pi = testing::random_policy(rng, nx, na, 0.3);
    for (std::size_t T = 0; T <= 4; ++T) {
      CHECK(std::abs(policy_value(mdp, pi, T).expected_value - enumerate_trajectories(mdp, pi, T)) <=
            1e-10);
    }
  }
}

TEST_CASE("zero discount gives the one-step expected reward") {
  std::mt19937_64 rng(5);
  TabularMDP mdp = testing::random_mdp(rng, 4, 3, 0.2, 0.0);
  PolicyTable pi = testing::random_policy(rng, 4, 3);
  double one_step = 0.0;
  for (std::size_t x = 0; x < 4; ++x) {
    for (std::size_t a = 0; a < 3; ++a) {
      one_step += mdp.initial_dist()[x] * pi(x, a) * mdp.expected_reward(x, a);
    }
  }
  for (std::size_t T = 1; T < 5; ++T) {
    CHECK(policy_value(mdp, pi, T).expected_value == doctest::Approx(one_step).epsilon(1e-14));
  }
}

TEST_CASE("policy_value is monotone in rewards") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    TabularMDP mdp = testing::random_mdp(rng, 3, 2, 0.2, 0.95);
    PolicyTable pi = testing::random_policy(rng, 3, 2);
    Tensor3 r = mdp.rewards();
    r.flat()[static_cast<std::size_t>(trial) % r.size()] += 0.3;
    TabularMDP bumped(mdp.transitions(), r, mdp.initial_dist(), mdp.discount());
    CHECK(policy_value(bumped, pi, 4).expected_value >= policy_value(mdp, pi, 4).expected_value);
  }
}

TEST_CASE("construction rejects invalid inputs") {
  Tensor3 p({2, 1, 2});
  Tensor3 r({2, 1, 2});
  p(0, 0, 0) = 0.7;
  p(1, 0, 1) = 1.0;
  CHECK_THROWS_AS(TabularMDP(p, r, {1.0, 0.0}, 0.9), ValidationError);
  p(0, 0, 1) = 0.3;
  CHECK_NOTHROW(TabularMDP(p, r, {1.0, 0.0}, 0.9));
  CHECK_THROWS_AS(TabularMDP(p, r, {0.5, 0.4}, 0.9), ValidationError);
  CHECK_THROWS_AS(TabularMDP(p, r, {1.0}, 0.9), DimensionError);
  CHECK_THROWS_AS(TabularMDP(p, r, {1.0, 0.0}, 1.5), ValidationError);
  Tensor3 bad_r({2, 1, 2});
  bad_r(0, 0, 0) = std::nan("");
  CHECK_THROWS_AS(TabularMDP(p, bad_r, {1.0, 0.0}, 0.9), ValidationError);
  Matrix pol({2, 2});
  pol(0, 0) = 0.5;
  pol(1, 1) = 1.0;
  CHECK_THROWS_AS(PolicyTable{pol}, ValidationError);
  TabularMDP mdp(p, r, {1.0, 0.0}, 0.9);
  CHECK_THROWS_AS(policy_value(mdp, PolicyTable::uniform(3, 1), 2), DimensionError);
}

TEST_CASE("ope-graph behavior value has the reference sign and scale") {
  BenchmarkEnv env = load_env("ope-graph");
  const double v = policy_value(env.mdp, env.pi_b, 4).expected_value;
  CHECK(v < 0.0);
  CHECK(v > -0.5);
}
