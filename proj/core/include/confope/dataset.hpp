#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "confope/confounded_model.hpp"
#include "confope/ndarray.hpp"

namespace confope {

/// One logged transition. The confounder value is not part of the record.
struct Step {
  std::size_t x = 0;
  std::size_t a = 0;
  std::size_t x_next = 0;
  double r = 0.0;

  bool operator==(const Step&) const = default;
};

using Trajectory = std::vector<Step>;

enum class DataMode { Sampled, Population };

/**
 * Marginal quantities a naive analyst estimates from logged data.
 *
 * pi_hat(a|x) = N(x,a)/N(x) and p_hat(x'|x,a) = N(x,a,x')/N(x,a) over visited
 * pairs; unvisited pairs are masked, never imputed. In population mode the
 * counts are empty and the estimates are the exact infinite-data limits.
 */
struct EmpiricalModel {
  DataMode mode = DataMode::Sampled;
  Matrix pi_hat;                          // [x][a], zero rows for unvisited x
  Tensor3 p_hat;                          // [x][a][x'], zero rows for unsupported (x,a)
  std::vector<std::uint64_t> counts;      // N(x,a), [x * A + a]; empty in population mode
  std::vector<bool> supported;            // [x * A + a]

  std::size_t n_states() const { return pi_hat.extent(0); }
  std::size_t n_actions() const { return pi_hat.extent(1); }
  bool is_supported(std::size_t x, std::size_t a) const {
    return supported[x * n_actions() + a];
  }
  /// True when some action was observed in x.
  bool state_visited(std::size_t x) const;
};

/// Optional side channel for tests: the hidden u_t of every step.
using ConfounderTrace = std::vector<std::vector<std::uint8_t>>;

/**
 * Rolls out `n_trajectories` trajectories of length `horizon` under the
 * confounded behavior policy, drawing u iid every step.
 *
 * Trajectory i uses its own mt19937_64 stream seeded with
 * splitmix64(seed ^ splitmix64(i)), and uniforms are taken from the top 53 bits
 * of each draw, so the output depends only on (cm, n, T, seed) on every
 * platform.
 */
std::vector<Trajectory> simulate(const ConfoundedMDP& cm, std::size_t n_trajectories,
                                 std::size_t horizon, std::uint64_t seed,
                                 ConfounderTrace* trace = nullptr);

EmpiricalModel estimate(std::span<const Trajectory> data, std::size_t n_states,
                        std::size_t n_actions);

/// Infinite-data limit: pi_hat = marginal pi_b, p_hat = apparent marginal.
EmpiricalModel population_model(const ConfoundedMDP& cm);

/// CSV with header `traj_id,t,x,a,x_next,r`, one row per step.
void write_dataset_csv(std::ostream& out, std::span<const Trajectory> data);
std::vector<Trajectory> read_dataset_csv(std::istream& in);

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace confope
