#pragma once

#include <string>

#include "confope/benchmarks.hpp"
#include "confope/confounded_model.hpp"
#include "confope/tabular_mdp.hpp"

namespace confope {

// JSON layout (all arrays nested in index order):
//   {"n_states", "n_actions", "gamma", "initial_dist",
//    "transitions": [x][a][x'], "rewards": [x][a][x']}
// Confounded models add "p_u", "transitions_u": [x][u][a][x'] and
// "behavior_u": [x][u][a]; "transitions" then holds the true marginal.
// Env files may add "name", "horizon", "pi_b" and "pi_e" ([x][a]).

std::string to_json(const TabularMDP& mdp);
std::string to_json(const ConfoundedMDP& cm);
std::string to_json(const BenchmarkEnv& env);

/// Throws ValidationError on malformed input.
TabularMDP mdp_from_json(const std::string& text);
ConfoundedMDP confounded_from_json(const std::string& text);

/// pi_e is required; pi_b defaults to uniform, horizon to 1 and the name to
/// `fallback_name`.
BenchmarkEnv env_from_json(const std::string& text, const std::string& fallback_name);

}  // namespace confope
