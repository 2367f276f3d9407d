#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "confope/tabular_mdp.hpp"

namespace confope {

/// A test environment with its logging and evaluation policies.
struct BenchmarkEnv {
  std::string name;
  TabularMDP mdp;
  PolicyTable pi_b;
  PolicyTable pi_e;
  std::size_t default_horizon = 1;
  double value_b = 0.0;  // policy_value(mdp, pi_b, default_horizon)
  double value_e = 0.0;  // policy_value(mdp, pi_e, default_horizon)
};

/// toy, ope-graph, ope-mc, ope-gridworld.
const std::vector<std::string>& env_names();

/// Throws ParameterError for an unknown name.
BenchmarkEnv load_env(const std::string& name);

/// Builds an env from its parts and fills in the reference values.
BenchmarkEnv make_env(std::string name, TabularMDP mdp, PolicyTable pi_b, PolicyTable pi_e,
                      std::size_t default_horizon);

/// States that return to themselves with probability one under every action.
std::vector<std::size_t> terminal_states(const TabularMDP& mdp);

/**
 * Removes absorbing states and makes rewards depend on the current state only.
 *
 * Mass flowing into a removed state is spread proportionally over the row's
 * remaining destinations; a row with no remaining destination restarts from
 * the (renormalized) initial distribution. The new reward is the expected
 * one-step reward under pi_e, and the discount becomes 0.95. An env without
 * absorbing states keeps its dynamics and only has rewards and discount
 * replaced; `warning`, if given, is set in that case.
 */
BenchmarkEnv steady_state_transform(const BenchmarkEnv& env, std::string* warning = nullptr);

}  // namespace confope
