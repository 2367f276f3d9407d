#include "confope/benchmarks.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "confope/error.hpp"

namespace confope {

namespace {

// Three states ordered from worst to best; action 1 drifts upward.
BenchmarkEnv build_toy() {
  constexpr std::size_t nx = 3;
  constexpr std::size_t na = 2;
  constexpr std::array<std::array<std::array<double, nx>, nx>, na> kP{{
      {{{0.6, 0.3, 0.1}, {0.4, 0.4, 0.2}, {0.3, 0.4, 0.3}}},
      {{{0.3, 0.4, 0.3}, {0.2, 0.4, 0.4}, {0.1, 0.3, 0.6}}},
  }};
  constexpr std::array<double, nx> kArrival{-0.3, 0.1, 0.5};
  Tensor3 p({nx, na, nx});
  Tensor3 r({nx, na, nx});
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t a = 0; a < na; ++a) {
      for (std::size_t y = 0; y < nx; ++y) {
        p(x, a, y) = kP[a][x][y];
        r(x, a, y) = kArrival[y];
      }
    }
  }
  Matrix pb({nx, na});
  Matrix pe({nx, na});
  for (std::size_t x = 0; x < nx; ++x) {
    pb(x, 0) = 0.55;
    pb(x, 1) = 0.45;
    pe(x, 0) = 0.4;
    pe(x, 1) = 0.6;
  }
  TabularMDP mdp(std::move(p), std::move(r), {0.5, 0.3, 0.2}, 1.0);
  return make_env("toy", std::move(mdp), PolicyTable(std::move(pb)), PolicyTable(std::move(pe)),
                  5);
}

// Start node, three layers of two nodes (top, bottom) and an absorbing
// terminal. Action 0 heads for the top node of the next layer, action 1 for
// the bottom one, each slipping to the other node with a small probability.
BenchmarkEnv build_graph() {
  constexpr std::size_t nx = 8;
  constexpr std::size_t na = 2;
  constexpr std::size_t terminal = 7;
  constexpr double kSlip = 0.15;
  constexpr std::array<double, 3> kLayerReward{0.2, 0.3, 0.4};
  constexpr double kFinalReward = 0.2;
  Tensor3 p({nx, na, nx});
  Tensor3 r({nx, na, nx});
  auto layer_of = [](std::size_t x) -> std::size_t { return x == 0 ? 0 : (x + 1) / 2; };
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t a = 0; a < na; ++a) {
      if (x == terminal) {
        p(x, a, terminal) = 1.0;
        continue;
      }
      const std::size_t layer = layer_of(x);
      if (layer == 3) {
        p(x, a, terminal) = 1.0;
        r(x, a, terminal) = x == 5 ? kFinalReward : -kFinalReward;
        continue;
      }
      const std::size_t top = 2 * layer + 1;
      const std::size_t bottom = top + 1;
      p(x, a, a == 0 ? top : bottom) = 1.0 - kSlip;
      p(x, a, a == 0 ? bottom : top) = kSlip;
      r(x, a, top) = kLayerReward[layer];
      r(x, a, bottom) = -kLayerReward[layer];
    }
  }
  Matrix pb({nx, na});
  Matrix pe({nx, na});
  for (std::size_t x = 0; x < nx; ++x) {
    pb(x, 0) = 0.4;
    pb(x, 1) = 0.6;
    pe(x, 0) = 0.9;
    pe(x, 1) = 0.1;
  }
  std::vector<double> init(nx, 0.0);
  init[0] = 1.0;
  TabularMDP mdp(std::move(p), std::move(r), std::move(init), 1.0);
  return make_env("ope-graph", std::move(mdp), PolicyTable(std::move(pb)),
                  PolicyTable(std::move(pe)), 4);
}

// Positions 0..20 of a chain with the goal (absorbing) at 21. Every step
// taken before reaching the goal costs 1. Action 1 pushes right, action 0
// pushes left; pushes succeed with probability kPush and otherwise the car
// rolls back one position.
BenchmarkEnv build_mc() {
  constexpr std::size_t nx = 22;
  constexpr std::size_t na = 2;
  constexpr std::size_t goal = 21;
  constexpr double kPush = 0.75;
  constexpr std::size_t kStartLo = 9;
  constexpr std::size_t kStartHi = 15;
  Tensor3 p({nx, na, nx});
  Tensor3 r({nx, na, nx});
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t a = 0; a < na; ++a) {
      if (x == goal) {
        p(x, a, goal) = 1.0;
        continue;
      }
      const std::size_t forward = a == 1 ? x + 1 : (x == 0 ? 0 : x - 1);
      const std::size_t back = a == 1 ? (x == 0 ? 0 : x - 1) : std::min(x + 1, goal);
      p(x, a, forward) += kPush;
      p(x, a, back) += 1.0 - kPush;
      for (std::size_t y = 0; y < nx; ++y) r(x, a, y) = -1.0;
    }
  }
  Matrix pb({nx, na});
  Matrix pe({nx, na});
  for (std::size_t x = 0; x < nx; ++x) {
    pb(x, 0) = 0.3;
    pb(x, 1) = 0.7;
    pe(x, 0) = 0.1;
    pe(x, 1) = 0.9;
  }
  std::vector<double> init(nx, 0.0);
  for (std::size_t x = kStartLo; x <= kStartHi; ++x) {
    init[x] = 1.0 / static_cast<double>(kStartHi - kStartLo + 1);
  }
  TabularMDP mdp(std::move(p), std::move(r), std::move(init), 1.0);
  return make_env("ope-mc", std::move(mdp), PolicyTable(std::move(pb)),
                  PolicyTable(std::move(pe)), 20);
}

// 4x4 grid, start in the top-left corner, absorbing goal in the bottom-right
// corner. Actions up, right, down, left; with probability kSlip the move goes
// in a uniformly random other direction. Each step costs kStepCost, entering
// the goal pays kGoalReward and the cell kPit costs kPitCost on entry.
BenchmarkEnv build_gridworld() {
  constexpr std::size_t side = 4;
  constexpr std::size_t nx = side * side;
  constexpr std::size_t na = 4;
  constexpr std::size_t goal = nx - 1;
  constexpr std::size_t kPit = 5;
  constexpr double kSlip = 0.2;
  constexpr double kStepCost = 0.06;
  constexpr double kGoalReward = 1.0;
  constexpr double kPitCost = 0.3;
  constexpr std::array<int, na> kDr{-1, 0, 1, 0};
  constexpr std::array<int, na> kDc{0, 1, 0, -1};
  auto move = [&](std::size_t x, std::size_t dir) {
    const int row = static_cast<int>(x / side) + kDr[dir];
    const int col = static_cast<int>(x % side) + kDc[dir];
    if (row < 0 || col < 0 || row >= static_cast<int>(side) || col >= static_cast<int>(side)) {
      return x;
    }
    return static_cast<std::size_t>(row) * side + static_cast<std::size_t>(col);
  };
  Tensor3 p({nx, na, nx});
  Tensor3 r({nx, na, nx});
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t a = 0; a < na; ++a) {
      if (x == goal) {
        p(x, a, goal) = 1.0;
        continue;
      }
      for (std::size_t dir = 0; dir < na; ++dir) {
        const double prob = dir == a ? 1.0 - kSlip : kSlip / static_cast<double>(na - 1);
        p(x, a, move(x, dir)) += prob;
      }
      for (std::size_t y = 0; y < nx; ++y) {
        r(x, a, y) = -kStepCost + (y == goal ? kGoalReward : 0.0) - (y == kPit ? kPitCost : 0.0);
      }
    }
  }
  // pi_e prefers right/down, pi_b is closer to uniform with the same tilt.
  Matrix pb({nx, na});
  Matrix pe({nx, na});
  constexpr std::array<double, na> kBehavior{0.2, 0.3, 0.3, 0.2};
  constexpr std::array<double, na> kEvaluation{0.05, 0.45, 0.45, 0.05};
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t a = 0; a < na; ++a) {
      pb(x, a) = kBehavior[a];
      pe(x, a) = kEvaluation[a];
    }
  }
  std::vector<double> init(nx, 0.0);
  init[0] = 1.0;
  TabularMDP mdp(std::move(p), std::move(r), std::move(init), 1.0);
  return make_env("ope-gridworld", std::move(mdp), PolicyTable(std::move(pb)),
                  PolicyTable(std::move(pe)), 8);
}

}  // namespace

const std::vector<std::string>& env_names() {
  static const std::vector<std::string> names{"toy", "ope-graph", "ope-mc", "ope-gridworld"};
  return names;
}

BenchmarkEnv make_env(std::string name, TabularMDP mdp, PolicyTable pi_b, PolicyTable pi_e,
                      std::size_t default_horizon) {
  check_same_shape(mdp, pi_b);
  check_same_shape(mdp, pi_e);
  if (default_horizon == 0) throw ParameterError("make_env: horizon must be >= 1");
  const double vb = policy_value(mdp, pi_b, default_horizon).expected_value;
  const double ve = policy_value(mdp, pi_e, default_horizon).expected_value;
  return BenchmarkEnv{std::move(name), std::move(mdp), std::move(pi_b), std::move(pi_e),
                      default_horizon, vb, ve};
}

BenchmarkEnv load_env(const std::string& name) {
  if (name == "toy") return build_toy();
  if (name == "ope-graph") return build_graph();
  if (name == "ope-mc") return build_mc();
  if (name == "ope-gridworld") return build_gridworld();
  throw ParameterError("unknown environment '" + name +
                       "' (expected toy, ope-graph, ope-mc or ope-gridworld)");
}

std::vector<std::size_t> terminal_states(const TabularMDP& mdp) {
  std::vector<std::size_t> out;
  for (std::size_t x = 0; x < mdp.n_states(); ++x) {
    bool absorbing = true;
    for (std::size_t a = 0; a < mdp.n_actions() && absorbing; ++a) {
      absorbing = mdp.transitions()(x, a, x) == 1.0;
    }
    if (absorbing) out.push_back(x);
  }
  return out;
}

BenchmarkEnv steady_state_transform(const BenchmarkEnv& env, std::string* warning) {
  const TabularMDP& mdp = env.mdp;
  const std::size_t nx = mdp.n_states();
  const std::size_t na = mdp.n_actions();
  const std::vector<std::size_t> terminals = terminal_states(mdp);
  std::vector<bool> drop(nx, false);
  for (std::size_t t : terminals) drop[t] = true;
  if (terminals.size() == nx) {
    throw ValidationError("steady_state_transform: every state is absorbing");
  }
  if (terminals.empty() && warning) {
    *warning = "environment '" + env.name + "' has no absorbing states; dynamics left unchanged";
  }
  std::vector<std::size_t> keep;
  std::vector<std::size_t> index(nx, 0);
  for (std::size_t x = 0; x < nx; ++x) {
    if (!drop[x]) {
      index[x] = keep.size();
      keep.push_back(x);
    }
  }
  const std::size_t n = keep.size();

  std::vector<double> init(n, 0.0);
  double init_mass = 0.0;
  for (std::size_t i = 0; i < n; ++i) init_mass += mdp.initial_dist()[keep[i]];
  for (std::size_t i = 0; i < n; ++i) {
    init[i] = init_mass > 0.0 ? mdp.initial_dist()[keep[i]] / init_mass
                              : 1.0 / static_cast<double>(n);
  }

  Tensor3 p({n, na, n});
  Tensor3 r({n, na, n});
  Matrix pb({n, na});
  Matrix pe({n, na});
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t x = keep[i];
    double state_reward = 0.0;
    for (std::size_t a = 0; a < na; ++a) {
      state_reward += env.pi_e(x, a) * mdp.expected_reward(x, a);
      pb(i, a) = env.pi_b(x, a);
      pe(i, a) = env.pi_e(x, a);
      double kept = 0.0;
      for (std::size_t j = 0; j < n; ++j) kept += mdp.transitions()(x, a, keep[j]);
      for (std::size_t j = 0; j < n; ++j) {
        p(i, a, j) = kept > 0.0 ? mdp.transitions()(x, a, keep[j]) / kept : init[j];
      }
    }
    for (std::size_t a = 0; a < na; ++a) {
      for (std::size_t j = 0; j < n; ++j) r(i, a, j) = state_reward;
    }
  }
  TabularMDP out(std::move(p), std::move(r), std::move(init), 0.95);
  return make_env(env.name + "-steady", std::move(out), PolicyTable(std::move(pb)),
                  PolicyTable(std::move(pe)), env.default_horizon);
}

}  // namespace confope
