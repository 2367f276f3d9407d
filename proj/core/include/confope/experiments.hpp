#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "confope/benchmarks.hpp"
#include "confope/confounded_model.hpp"
#include "confope/fqe_bound.hpp"

namespace confope {

enum class Method { Fqe, Robust, Naive, SingleStep };

/// fqe, robust, naive, single-step. Throws ParameterError otherwise.
Method parse_method(const std::string& name);
std::string to_string(Method method);

/// Where the observed model comes from. By default the env's dynamics and
/// pi_b are lifted to an unconfounded model; `inject` adds confounding first.
struct DataSpec {
  bool sampled = false;
  std::size_t n_trajectories = 0;
  std::uint64_t seed = 0;
  std::optional<InjectionOptions> inject;
};

struct SweepSpec {
  explicit SweepSpec(BenchmarkEnv e) : env(std::move(e)) {}

  BenchmarkEnv env;
  std::vector<Method> methods{Method::Fqe, Method::Robust};
  std::vector<double> gammas;
  std::vector<double> deltas;
  double p = 0.5;
  std::size_t horizon = 0;  // 0 means the env's default horizon
  DataSpec data;
  bool timing = true;  // false writes runtime_ms = 0 for byte-stable output

  /// Throws ParameterError on empty lists or parameters below 1.
  void validate() const;
  std::size_t effective_horizon() const { return horizon == 0 ? env.default_horizon : horizon; }
};

struct BoundResult {
  std::string env;
  Method method = Method::Fqe;
  double gamma = 1.0;
  double delta = 1.0;
  double p = 0.5;
  std::size_t horizon = 0;
  double bound = 0.0;
  double nominal_value = 0.0;
  double behavior_value = 0.0;
  double runtime_ms = 0.0;
  std::optional<std::uint64_t> seed;
  BoundDiagnostics diagnostics;
  std::optional<double> gap;
};

/// The observed-data problem for `env` under `data`, with trajectories of
/// length `horizon` in sampled mode.
EvaluationProblem build_problem(const BenchmarkEnv& env, const DataSpec& data, double p,
                                std::size_t horizon);

/// The confounded model that generates the data for `env`.
ConfoundedMDP data_generator(const BenchmarkEnv& env, const DataSpec& data, double p,
                             std::size_t horizon);

/// One row per (method, gamma, delta), ordered by method, then gamma, then delta.
std::vector<BoundResult> run_sweep(const SweepSpec& spec);

/// Zips the lists into (gamma, delta) pairs; a list of length one is
/// repeated. Throws ParameterError on other length mismatches.
std::vector<std::pair<double, double>> paired(const std::vector<double>& gammas,
                                              const std::vector<double>& deltas);

/// Robust bound plus the candidate-model gap for each pair from
/// paired(gammas, deltas) and each horizon in `horizons` (empty means the
/// spec's horizon).
std::vector<BoundResult> run_tightness(const SweepSpec& spec,
                                       const std::vector<std::size_t>& horizons = {});

/// Robust bound for t = 1..T for each (gamma, delta); nominal_value holds
/// the nominal value at the same t. The caller applies steady_state_transform.
std::vector<BoundResult> run_horizon(const SweepSpec& spec);

struct SingleStepReport {
  SensitivityAudit audited;
  std::vector<BoundResult> rows;  // single-step and robust at the audited parameters
};

/// Injects confounding into the env, audits the achieved (Gamma, Delta) and
/// evaluates the single-step and full-horizon robust bounds there.
SingleStepReport run_single_step(const SweepSpec& spec, const InjectionOptions& injection);

inline const char* kCsvHeader =
    "env,method,gamma,delta,p,horizon,bound,nominal_value,behavior_value,runtime_ms,seed";

/// Writes the header and one line per row; adds a gap column if `with_gap`.
void write_csv(std::ostream& out, std::span<const BoundResult> rows, bool with_gap = false);

/// Parses CSV written by write_csv. Throws ValidationError on malformed input.
std::vector<BoundResult> read_csv(std::istream& in);

/// Shortest round-trip decimal form.
std::string format_number(double v);

/// Worker count from CONFOPE_THREADS, capped by the hardware.
std::size_t worker_count();

}  // namespace confope
