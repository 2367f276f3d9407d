#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "confope/confounded_model.hpp"
#include "confope/dataset.hpp"
#include "confope/fqe_bound.hpp"
#include "confope/tabular_mdp.hpp"

namespace testing {

using namespace confope;

inline double uniform(std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Random distribution; with `sparsity` > 0 some entries are zeroed (at least
/// one entry stays positive).
inline std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t n,
                                          double sparsity = 0.0) {
  std::vector<double> w(n, 0.0);
  const std::size_t keep = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i != keep && uniform(rng) < sparsity) continue;
    w[i] = -std::log(uniform(rng, 1e-3, 1.0));
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

inline TabularMDP random_mdp(std::mt19937_64& rng, std::size_t nx, std::size_t na,
                             double sparsity = 0.0, double discount = 0.9) {
  Tensor3 p({nx, na, nx});
  Tensor3 r({nx, na, nx});
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t a = 0; a < na; ++a) {
      const std::vector<double> row = random_simplex(rng, nx, sparsity);
      for (std::size_t y = 0; y < nx; ++y) {
        p(x, a, y) = row[y];
        r(x, a, y) = uniform(rng, -1.0, 1.0);
      }
    }
  }
  return TabularMDP(std::move(p), std::move(r), random_simplex(rng, nx), discount);
}

inline PolicyTable random_policy(std::mt19937_64& rng, std::size_t nx, std::size_t na,
                                 double sparsity = 0.0) {
  Matrix m({nx, na});
  for (std::size_t x = 0; x < nx; ++x) {
    const std::vector<double> row = random_simplex(rng, na, sparsity);
    for (std::size_t a = 0; a < na; ++a) m(x, a) = row[a];
  }
  return PolicyTable(std::move(m));
}

/// Independent random per-u dynamics and behavior.
inline ConfoundedMDP random_confounded(std::mt19937_64& rng, std::size_t nx, std::size_t na,
                                       double sparsity = 0.0) {
  constexpr std::size_t nu = kNumConfounderValues;
  Tensor4 tu({nx, nu, na, nx});
  Tensor3 bu({nx, nu, na});
  Tensor3 r({nx, na, nx});
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t u = 0; u < nu; ++u) {
      const std::vector<double> b = random_simplex(rng, na, sparsity);
      for (std::size_t a = 0; a < na; ++a) {
        bu(x, u, a) = b[a];
        const std::vector<double> row = random_simplex(rng, nx, sparsity);
        for (std::size_t y = 0; y < nx; ++y) tu(x, u, a, y) = row[y];
      }
    }
    for (std::size_t a = 0; a < na; ++a) {
      for (std::size_t y = 0; y < nx; ++y) r(x, a, y) = uniform(rng, -1.0, 1.0);
    }
  }
  return ConfoundedMDP(std::move(tu), std::move(bu), uniform(rng, 0.2, 0.8), std::move(r),
                       random_simplex(rng, nx), uniform(rng, 0.8, 1.0));
}

/// Two states, two actions. In state 0 action 0 is taken with probability
/// 0.75 under u = 1 and 0.25 under u = 0, and leads to state 1 with
/// probability 0.8 under u = 1 and 0.2 under u = 0. With p = 0.5 the true
/// marginal of that transition is 0.5 and the apparent one is 0.65.
inline ConfoundedMDP bayes_example() {
  Tensor4 tu({2, 2, 2, 2});
  Tensor3 bu({2, 2, 2});
  for (std::size_t x = 0; x < 2; ++x) {
    for (std::size_t u = 0; u < 2; ++u) {
      for (std::size_t a = 0; a < 2; ++a) {
        bu(x, u, a) = 0.5;
        tu(x, u, a, 0) = 0.5;
        tu(x, u, a, 1) = 0.5;
      }
    }
  }
  bu(0, 1, 0) = 0.75;
  bu(0, 1, 1) = 0.25;
  bu(0, 0, 0) = 0.25;
  bu(0, 0, 1) = 0.75;
  tu(0, 1, 0, 1) = 0.8;
  tu(0, 1, 0, 0) = 0.2;
  tu(0, 0, 0, 1) = 0.2;
  tu(0, 0, 0, 0) = 0.8;
  Tensor3 r({2, 2, 2});
  r(0, 0, 1) = 1.0;
  return ConfoundedMDP(std::move(tu), std::move(bu), 0.5, std::move(r), {1.0, 0.0}, 1.0);
}

/// Population-mode evaluation problem for `cm`.
inline EvaluationProblem population_problem(const ConfoundedMDP& cm, const PolicyTable& pi_e) {
  return EvaluationProblem{population_model(cm), cm.rewards(), cm.initial_dist(), cm.discount(),
                           pi_e};
}

}  // namespace testing
