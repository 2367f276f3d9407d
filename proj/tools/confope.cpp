// confope: command-line harness for the confounded off-policy evaluation bounds.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "confope/benchmarks.hpp"
#include "confope/dataset.hpp"
#include "confope/error.hpp"
#include "confope/experiments.hpp"
#include "confope/plot.hpp"
#include "confope/serialization.hpp"

namespace {

using namespace confope;

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

const std::vector<double> kDefaultGammas{1.1, 1.25, 1.5, 1.75, 2, 2.5, 3, 3.5, 4, 5, 6, 7, 8, 9, 10};
const std::vector<double> kDefaultDeltas{1.1, 1.5, 2, 4, 10};

struct EnvArgs {
  std::string name;
  std::string file;
};

struct DataArgs {
  double p = 0.5;
  std::size_t sample = 0;
  std::uint64_t seed = 0;
  std::string inject;
  double gamma_star = 2.0;
  double delta_star = 2.0;
};

void add_env_options(CLI::App* cmd, EnvArgs& env) {
  auto* name = cmd->add_option("--env", env.name, "Built-in environment: toy, ope-graph, ope-mc, ope-gridworld");
  auto* file = cmd->add_option("--env-file", env.file, "Environment JSON file")->check(CLI::ExistingFile);
  name->excludes(file);
  file->excludes(name);
}

void add_data_options(CLI::App* cmd, DataArgs& data) {
  cmd->add_option("--p", data.p, "p(u = 1)")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--sample", data.sample, "Estimate from N sampled trajectories instead of population mode");
  cmd->add_option("--seed", data.seed, "Seed for sampled mode");
  cmd->add_option("--inject", data.inject, "Confound the data generator, tilting by 'reward' or 'optimal-value'");
  cmd->add_option("--gamma-star", data.gamma_star, "Target policy odds ratio for --inject")->check(CLI::Range(1.0, 1e12));
  cmd->add_option("--delta-star", data.delta_star, "Target transition odds ratio for --inject")->check(CLI::Range(1.0, 1e12));
}

BenchmarkEnv resolve_env(const EnvArgs& args) {
  if (!args.file.empty()) {
    std::ifstream in(args.file);
    if (!in) throw Error("cannot read " + args.file);
    std::stringstream buf;
    buf << in.rdbuf();
    return env_from_json(buf.str(), args.file);
  }
  if (args.name.empty()) throw ParameterError("one of --env or --env-file is required");
  return load_env(args.name);
}

DataSpec resolve_data(const DataArgs& args, std::size_t horizon) {
  DataSpec spec;
  if (args.sample > 0) {
    spec.sampled = true;
    spec.n_trajectories = args.sample;
    spec.seed = args.seed;
  }
  if (!args.inject.empty()) {
    InjectionOptions opts;
    opts.gamma_star = args.gamma_star;
    opts.delta_star = args.delta_star;
    opts.p = args.p;
    opts.signal = parse_tilt_signal(args.inject);
    opts.horizon = horizon;
    spec.inject = opts;
  }
  return spec;
}

/// Writes `text` to `path`, or to stdout if `path` is empty or "-".
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
  if (!out) throw Error("failed writing " + path);
}

std::string csv(const std::vector<BoundResult>& rows, bool with_gap) {
  std::ostringstream out;
  write_csv(out, rows, with_gap);
  return out.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lower bounds for off-policy evaluation under iid unobserved confounding"};
  app.require_subcommand(1);

  EnvArgs env_args;
  DataArgs data_args;
  std::vector<std::string> methods{"fqe", "robust"};
  std::vector<double> gammas;
  std::vector<double> deltas;
  std::vector<std::size_t> horizons;
  std::string out_path;
  bool no_timing = false;

  auto common = [&](CLI::App* cmd) {
    add_env_options(cmd, env_args);
    add_data_options(cmd, data_args);
    cmd->add_option("--gamma", gammas, "Policy sensitivity values (>= 1)");
    cmd->add_option("--delta", deltas, "Transition sensitivity values (>= 1)");
    cmd->add_option("--out", out_path, "Output path (default stdout)");
    cmd->add_flag("--no-timing", no_timing, "Write runtime_ms = 0 so output is byte-stable");
  };

  auto* sweep = app.add_subcommand("sweep", "Bounds over a Gamma x Delta grid");
  common(sweep);
  sweep->add_option("--method", methods, "fqe, robust, naive, single-step (repeatable)");
  sweep->add_option("--horizon", horizons, "Horizon T (default: the env's)")->expected(1);

  auto* tightness = app.add_subcommand("tightness", "Robust bound vs its candidate model value");
  common(tightness);
  tightness->add_option("--horizon", horizons, "One or more horizons");

  auto* horizon = app.add_subcommand("horizon", "Robust bounds for t = 1..T on the steady-state env");
  common(horizon);
  horizon->add_option("--horizon", horizons, "Largest horizon (default 200)")->expected(1);

  auto* single = app.add_subcommand("single-step", "Confounding in one step only, at audited parameters");
  add_env_options(single, env_args);
  add_data_options(single, data_args);
  single->add_option("--horizon", horizons, "Horizon T (default: the env's)")->expected(1);
  single->add_option("--out", out_path, "Output path (default stdout)");
  single->add_flag("--no-timing", no_timing, "Write runtime_ms = 0 so output is byte-stable");

  std::string plot_in;
  std::string plot_title;
  auto* plot = app.add_subcommand("plot", "Render a results CSV as SVG");
  plot->add_option("csv", plot_in, "Results CSV")->required()->check(CLI::ExistingFile);
  plot->add_option("--out", out_path, "Output SVG path (default stdout)");
  plot->add_option("--title", plot_title, "Chart title");

  auto* simulate_cmd = app.add_subcommand("simulate", "Sample a trajectory dataset as CSV");
  add_env_options(simulate_cmd, env_args);
  add_data_options(simulate_cmd, data_args);
  simulate_cmd->add_option("--horizon", horizons, "Trajectory length (default: the env's)")->expected(1);
  simulate_cmd->add_option("--out", out_path, "Output path (default stdout)");

  bool steady = false;
  auto* inspect = app.add_subcommand("inspect", "Print an environment as JSON");
  add_env_options(inspect, env_args);
  inspect->add_flag("--steady-state", steady, "Apply the steady-state transform first");
  inspect->add_option("--out", out_path, "Output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (plot->parsed()) {
      std::ifstream in(plot_in);
      if (!in) throw Error("cannot read " + plot_in);
      const std::vector<BoundResult> rows = read_csv(in);
      PlotOptions opts;
      opts.title = plot_title;
      emit(out_path, render_svg(rows, opts));
      return 0;
    }

    BenchmarkEnv env = resolve_env(env_args);
    if (inspect->parsed()) {
      if (steady) {
        std::string warning;
        env = steady_state_transform(env, &warning);
        if (!warning.empty()) std::cerr << "warning: " << warning << '\n';
      }
      emit(out_path, to_json(env) + "\n");
      return 0;
    }

    SweepSpec spec{env};
    spec.p = data_args.p;
    spec.timing = !no_timing;
    if (!horizons.empty()) spec.horizon = horizons.front();
    for (std::size_t h : horizons) {
      if (h == 0) throw ParameterError("--horizon must be >= 1");
    }

    if (simulate_cmd->parsed()) {
      if (data_args.sample == 0) throw ParameterError("simulate needs --sample N");
      const std::size_t T = spec.effective_horizon();
      const ConfoundedMDP cm = data_generator(env, resolve_data(data_args, T), data_args.p, T);
      const std::vector<Trajectory> data = simulate(cm, data_args.sample, T, data_args.seed);
      std::ostringstream out;
      write_dataset_csv(out, data);
      emit(out_path, out.str());
      return 0;
    }

    if (single->parsed()) {
      InjectionOptions opts;
      opts.gamma_star = data_args.gamma_star;
      opts.delta_star = data_args.delta_star;
      opts.p = data_args.p;
      opts.signal = data_args.inject.empty() ? TiltSignal::OptimalValue
                                             : parse_tilt_signal(data_args.inject);
      opts.horizon = spec.effective_horizon();
      DataArgs sampling = data_args;
      sampling.inject.clear();
      spec.data = resolve_data(sampling, opts.horizon);
      SingleStepReport rep = run_single_step(spec, opts);
      std::cerr << "audited Gamma* = " << rep.audited.gamma << ", Delta* = " << rep.audited.delta
                << '\n';
      emit(out_path, csv(rep.rows, false));
      return 0;
    }

    if (horizon->parsed()) {
      std::string warning;
      spec.env = steady_state_transform(env, &warning);
      if (!warning.empty()) std::cerr << "warning: " << warning << '\n';
      spec.horizon = horizons.empty() ? 200 : horizons.front();
      spec.gammas = gammas.empty() ? std::vector<double>{1.5, 2, 10} : gammas;
      spec.deltas = deltas.empty() ? std::vector<double>{1e6} : deltas;
      spec.methods = {Method::Robust};
      spec.data = resolve_data(data_args, spec.effective_horizon());
      emit(out_path, csv(run_horizon(spec), false));
      return 0;
    }

    if (tightness->parsed()) {
      spec.gammas = gammas.empty() ? std::vector<double>{2, 10} : gammas;
      spec.deltas = deltas.empty() ? std::vector<double>{2, 10} : deltas;
      spec.methods = {Method::Robust};
      spec.data = resolve_data(data_args, spec.effective_horizon());
      emit(out_path, csv(run_tightness(spec, horizons), true));
      return 0;
    }

    // sweep
    spec.gammas = gammas.empty() ? kDefaultGammas : gammas;
    spec.deltas = deltas.empty() ? kDefaultDeltas : deltas;
    spec.methods.clear();
    for (const std::string& m : methods) spec.methods.push_back(parse_method(m));
    spec.data = resolve_data(data_args, spec.effective_horizon());
    emit(out_path, csv(run_sweep(spec), false));
    return 0;
  } catch (const ParameterError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}
