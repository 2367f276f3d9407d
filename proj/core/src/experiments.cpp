#include "confope/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "confope/dataset.hpp"
#include "confope/error.hpp"
#include "confope/robust_bound.hpp"

namespace confope {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

/// Runs fn(i) for i in [0, n) on worker_count() threads. The first exception
/// is rethrown after all workers stop.
template <typename Fn>
void parallel_for(std::size_t n, Fn fn) {
  const std::size_t workers = std::min(worker_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

struct Baseline {
  double nominal = 0.0;
  double behavior = 0.0;
};

Baseline baseline(const EvaluationProblem& problem, std::size_t horizon) {
  return Baseline{nominal_fqe(problem, horizon).expected_lower, behavior_value(problem, horizon)};
}

BoundResult base_row(const SweepSpec& spec, Method method, double gamma, double delta,
                     std::size_t horizon, const Baseline& ref) {
  BoundResult row;
  row.env = spec.env.name;
  row.method = method;
  row.gamma = gamma;
  row.delta = delta;
  row.p = spec.p;
  row.horizon = horizon;
  row.nominal_value = ref.nominal;
  row.behavior_value = ref.behavior;
  if (spec.data.sampled) row.seed = spec.data.seed;
  return row;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_double(const std::string& s, std::size_t line_no) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ValidationError("CSV line " + std::to_string(line_no) + ": bad number '" + s + "'");
  }
  return v;
}

std::uint64_t parse_uint(const std::string& s, std::size_t line_no) {
  std::uint64_t v = 0;
  const char* end = s.data() + s.size();
  auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ValidationError("CSV line " + std::to_string(line_no) + ": bad integer '" + s + "'");
  }
  return v;
}

}  // namespace

std::vector<std::pair<double, double>> paired(const std::vector<double>& gammas,
                                              const std::vector<double>& deltas) {
  const std::size_t n = std::max(gammas.size(), deltas.size());
  if ((gammas.size() != n && gammas.size() != 1) || (deltas.size() != n && deltas.size() != 1)) {
    throw ParameterError("gamma and delta lists must have equal length or length one");
  }
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.emplace_back(gammas[gammas.size() == 1 ? 0 : i], deltas[deltas.size() == 1 ? 0 : i]);
  }
  return out;
}

Method parse_method(const std::string& name) {
  if (name == "fqe") return Method::Fqe;
  if (name == "robust") return Method::Robust;
  if (name == "naive") return Method::Naive;
  if (name == "single-step") return Method::SingleStep;
  throw ParameterError("unknown method '" + name + "' (expected fqe, robust, naive or single-step)");
}

std::string to_string(Method method) {
  switch (method) {
    case Method::Fqe:
      return "fqe";
    case Method::Robust:
      return "robust";
    case Method::Naive:
      return "naive";
    case Method::SingleStep:
      return "single-step";
  }
  return "unknown";
}

std::size_t worker_count() {
  std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("CONFOPE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) hw = std::min(hw, static_cast<std::size_t>(v));
  }
  return hw;
}

void SweepSpec::validate() const {
  if (methods.empty()) throw ParameterError("sweep: no methods given");
  if (gammas.empty()) throw ParameterError("sweep: empty gamma list");
  if (deltas.empty()) throw ParameterError("sweep: empty delta list");
  for (double g : gammas) SensitivityParams{g, 1.0, p}.validate();
  for (double d : deltas) SensitivityParams{1.0, d, p}.validate();
  if (data.sampled && data.n_trajectories == 0) {
    throw ParameterError("sweep: sampled mode needs at least one trajectory");
  }
}

ConfoundedMDP data_generator(const BenchmarkEnv& env, const DataSpec& data, double p,
                             std::size_t horizon) {
  if (data.inject) {
    InjectionOptions opts = *data.inject;
    if (opts.horizon == 0) opts.horizon = horizon;
    return inject_confounding(env.mdp, env.pi_b, opts).model;
  }
  return ConfoundedMDP::unconfounded(env.mdp, env.pi_b, p);
}

EvaluationProblem build_problem(const BenchmarkEnv& env, const DataSpec& data, double p,
                                std::size_t horizon) {
  const ConfoundedMDP cm = data_generator(env, data, p, horizon);
  EmpiricalModel model;
  if (data.sampled) {
    const std::vector<Trajectory> trajs = simulate(cm, data.n_trajectories, horizon, data.seed);
    model = estimate(trajs, cm.n_states(), cm.n_actions());
  } else {
    model = population_model(cm);
  }
  return EvaluationProblem{std::move(model), env.mdp.rewards(), env.mdp.initial_dist(),
                           env.mdp.discount(), env.pi_e};
}

std::vector<BoundResult> run_sweep(const SweepSpec& spec) {
  spec.validate();
  const std::size_t T = spec.effective_horizon();
  const EvaluationProblem problem = build_problem(spec.env, spec.data, spec.p, T);
  const Baseline ref = baseline(problem, T);

  // Gamma-only methods are computed once per gamma and repeated across deltas.
  struct Task {
    Method method;
    double gamma;
    double delta;
  };
  std::vector<Task> tasks;
  std::vector<std::size_t> row_task;
  for (Method m : spec.methods) {
    const bool gamma_only = m == Method::Fqe || m == Method::Naive;
    for (double g : spec.gammas) {
      const std::size_t first = tasks.size();
      for (std::size_t k = 0; k < spec.deltas.size(); ++k) {
        if (!gamma_only || k == 0) tasks.push_back(Task{m, g, spec.deltas[k]});
        row_task.push_back(gamma_only ? first : tasks.size() - 1);
      }
    }
  }

  std::vector<BoundResult> computed(tasks.size());
  parallel_for(tasks.size(), [&](std::size_t i) {
    const Task& task = tasks[i];
    const SensitivityParams params{task.gamma, task.delta, spec.p};
    BoundResult row = base_row(spec, task.method, task.gamma, task.delta, T, ref);
    const Clock::time_point start = Clock::now();
    switch (task.method) {
      case Method::Fqe: {
        FqeBoundResult r = confounded_fqe(problem, params, T);
        row.bound = r.expected_lower;
        row.diagnostics = r.diagnostics;
        break;
      }
      case Method::Naive: {
        FqeBoundResult r = naive_bound(problem, task.gamma, T);
        row.bound = r.expected_lower;
        row.diagnostics = r.diagnostics;
        break;
      }
      case Method::Robust: {
        RobustRun r = robust_value_iteration(problem, params, T);
        row.bound = r.bound.expected_lower;
        row.diagnostics = r.bound.diagnostics;
        break;
      }
      case Method::SingleStep: {
        RobustBoundResult r = single_step_bound(problem, params, T);
        row.bound = r.expected_lower;
        row.diagnostics = r.diagnostics;
        break;
      }
    }
    row.runtime_ms = spec.timing ? elapsed_ms(start) : 0.0;
    computed[i] = std::move(row);
  });

  std::vector<BoundResult> rows;
  rows.reserve(row_task.size());
  std::size_t r = 0;
  for (Method m : spec.methods) {
    (void)m;
    for (std::size_t gi = 0; gi < spec.gammas.size(); ++gi) {
      for (double d : spec.deltas) {
        BoundResult row = computed[row_task[r++]];
        row.delta = d;
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

std::vector<BoundResult> run_tightness(const SweepSpec& spec,
                                       const std::vector<std::size_t>& horizons) {
  spec.validate();
  std::vector<std::size_t> hs = horizons;
  if (hs.empty()) hs.push_back(spec.effective_horizon());
  std::vector<BoundResult> rows;
  for (std::size_t T : hs) {
    if (T == 0) throw ParameterError("tightness: horizon must be >= 1");
    const EvaluationProblem problem = build_problem(spec.env, spec.data, spec.p, T);
    const Baseline ref = baseline(problem, T);
    const std::vector<std::pair<double, double>> grid = paired(spec.gammas, spec.deltas);
    std::vector<BoundResult> part(grid.size());
    parallel_for(grid.size(), [&](std::size_t i) {
      const SensitivityParams params{grid[i].first, grid[i].second, spec.p};
      BoundResult row = base_row(spec, Method::Robust, params.gamma, params.delta, T, ref);
      const Clock::time_point start = Clock::now();
      RobustRun run = robust_value_iteration(problem, params, T);
      TightnessReport rep =
          tightness_check(problem, params, T, run.candidate, run.bound.expected_lower);
      row.bound = rep.bound;
      row.gap = rep.gap;
      row.diagnostics = run.bound.diagnostics;
      row.runtime_ms = spec.timing ? elapsed_ms(start) : 0.0;
      part[i] = std::move(row);
    });
    for (BoundResult& row : part) rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<BoundResult> run_horizon(const SweepSpec& spec) {
  spec.validate();
  const std::size_t T = spec.effective_horizon();
  const EvaluationProblem problem = build_problem(spec.env, spec.data, spec.p, T);
  const std::vector<double> nominal = nominal_fqe(problem, T).expected_by_horizon;
  std::vector<double> behavior(T + 1, 0.0);
  for (std::size_t t = 1; t <= T; ++t) behavior[t] = behavior_value(problem, t);

  std::vector<std::pair<double, double>> grid;
  for (double g : spec.gammas) {
    for (double d : spec.deltas) grid.emplace_back(g, d);
  }
  std::vector<std::vector<BoundResult>> parts(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    const SensitivityParams params{grid[i].first, grid[i].second, spec.p};
    const Clock::time_point start = Clock::now();
    RobustRun run = robust_value_iteration(problem, params, T);
    const double ms = spec.timing ? elapsed_ms(start) : 0.0;
    for (std::size_t t = 1; t <= T; ++t) {
      BoundResult row = base_row(spec, Method::Robust, params.gamma, params.delta, t,
                                 Baseline{nominal[t], behavior[t]});
      row.bound = run.bound.expected_by_horizon[t];
      row.runtime_ms = ms;
      row.diagnostics = run.bound.diagnostics;
      parts[i].push_back(std::move(row));
    }
  });
  std::vector<BoundResult> rows;
  for (auto& part : parts) {
    for (BoundResult& row : part) rows.push_back(std::move(row));
  }
  return rows;
}

SingleStepReport run_single_step(const SweepSpec& spec, const InjectionOptions& injection) {
  const std::size_t T = spec.effective_horizon();
  SweepSpec local = spec;
  local.data.inject = injection;
  if (local.data.inject->horizon == 0) local.data.inject->horizon = T;
  local.p = injection.p;
  const ConfoundedMDP cm = data_generator(local.env, local.data, local.p, T);
  SingleStepReport report;
  report.audited = audit_sensitivity(cm);
  local.gammas = {report.audited.gamma};
  local.deltas = {report.audited.delta};
  local.methods = {Method::SingleStep, Method::Robust};
  report.rows = run_sweep(local);
  return report;
}

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_csv(std::ostream& out, std::span<const BoundResult> rows, bool with_gap) {
  out << kCsvHeader << (with_gap ? ",gap" : "") << '\n';
  for (const BoundResult& r : rows) {
    out << r.env << ',' << to_string(r.method) << ',' << format_number(r.gamma) << ','
        << format_number(r.delta) << ',' << format_number(r.p) << ',' << r.horizon << ','
        << format_number(r.bound) << ',' << format_number(r.nominal_value) << ','
        << format_number(r.behavior_value) << ',' << format_number(r.runtime_ms) << ',';
    if (r.seed) out << *r.seed;
    if (with_gap) out << ',' << (r.gap ? format_number(*r.gap) : std::string());
    out << '\n';
  }
}

std::vector<BoundResult> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("CSV: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::string header = kCsvHeader;
  bool with_gap = false;
  if (line == header + ",gap") {
    with_gap = true;
  } else if (line != header) {
    throw ValidationError("CSV: unexpected header '" + line + "'");
  }
  const std::size_t n_cells = with_gap ? 12 : 11;
  std::vector<BoundResult> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> c = split(line);
    if (c.size() != n_cells) {
      throw ValidationError("CSV line " + std::to_string(line_no) + ": expected " +
                            std::to_string(n_cells) + " fields");
    }
    BoundResult r;
    r.env = c[0];
    try {
      r.method = parse_method(c[1]);
    } catch (const ParameterError& e) {
      throw ValidationError("CSV line " + std::to_string(line_no) + ": " + e.what());
    }
    r.gamma = parse_double(c[2], line_no);
    r.delta = parse_double(c[3], line_no);
    r.p = parse_double(c[4], line_no);
    r.horizon = parse_uint(c[5], line_no);
    r.bound = parse_double(c[6], line_no);
    r.nominal_value = parse_double(c[7], line_no);
    r.behavior_value = parse_double(c[8], line_no);
    r.runtime_ms = parse_double(c[9], line_no);
    if (!c[10].empty()) r.seed = parse_uint(c[10], line_no);
    if (with_gap && !c[11].empty()) r.gap = parse_double(c[11], line_no);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace confope
