#include <doctest.h>

#include <sstream>

#include "confope/error.hpp"
#include "confope/experiments.hpp"
#include "confope/plot.hpp"
#include "confope/serialization.hpp"

using namespace confope;

namespace {

SweepSpec toy_spec(std::vector<Method> methods, std::vector<double> gammas,
                   std::vector<double> deltas) {
  SweepSpec spec{load_env("toy")};
  spec.methods = std::move(methods);
  spec.gammas = std::move(gammas);
  spec.deltas = std::move(deltas);
  spec.timing = false;
  return spec;
}

std::string to_csv(const std::vector<BoundResult>& rows, bool with_gap = false) {
  std::ostringstream out;
  write_csv(out, rows, with_gap);
  return out.str();
}

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t pos = text.find(needle); pos != std::string::npos;
       pos = text.find(needle, pos + 1)) {
    ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("Gamma = 1 gives the nominal value for every method") {
  const SweepSpec spec = toy_spec(
      {Method::Fqe, Method::Robust, Method::Naive, Method::SingleStep}, {1.0}, {1.0, 3.0});
  for (const BoundResult& row : run_sweep(spec)) {
    CHECK(std::abs(row.bound - row.nominal_value) <= 1e-9);
    CHECK(row.horizon == 5);
    CHECK_FALSE(row.seed.has_value());
  }
}

TEST_CASE("sweep rows are ordered and bounded by nominal") {
  const SweepSpec spec = toy_spec({Method::Fqe, Method::Robust}, {1.5, 3.0}, {1.1, 2.0});
  const std::vector<BoundResult> rows = run_sweep(spec);
  REQUIRE(rows.size() == 8);
  CHECK(rows[0].method == Method::Fqe);
  CHECK(rows[4].method == Method::Robust);
  CHECK(rows[5].gamma == 1.5);
  CHECK(rows[5].delta == 2.0);
  CHECK(rows[6].gamma == 3.0);
  for (const BoundResult& row : rows) {
    CHECK(row.bound <= row.nominal_value + 1e-9);
    CHECK(row.runtime_ms == 0.0);
  }
}

TEST_CASE("robust sweep on toy is monotone in both parameters") {
  const std::vector<double> gammas{1.1, 1.5, 2.0, 4.0, 10.0};
  const std::vector<double> deltas{1.1, 1.5, 2.0, 4.0, 10.0};
  const std::vector<BoundResult> rows = run_sweep(toy_spec({Method::Robust}, gammas, deltas));
  REQUIRE(rows.size() == 25);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) {
      const double v = rows[i * 5 + j].bound;
      if (i > 0) CHECK(v <= rows[(i - 1) * 5 + j].bound + 1e-9);
      if (j > 0) CHECK(v <= rows[i * 5 + j - 1].bound + 1e-9);
    }
  }
}

TEST_CASE("population-mode output is byte-identical across runs") {
  const SweepSpec spec = toy_spec({Method::Fqe, Method::Robust, Method::Naive}, {1.25, 2.0}, {2.0});
  const std::string a = to_csv(run_sweep(spec));
  const std::string b = to_csv(run_sweep(spec));
  CHECK(a == b);
  CHECK(a.rfind(std::string(kCsvHeader) + "\n", 0) == 0);
}

TEST_CASE("sampled mode records the seed and is reproducible") {
  SweepSpec spec = toy_spec({Method::Fqe}, {2.0}, {1.0});
  spec.data.sampled = true;
  spec.data.n_trajectories = 500;
  spec.data.seed = 31;
  const std::vector<BoundResult> rows = run_sweep(spec);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].seed == std::optional<std::uint64_t>{31});
  CHECK(to_csv(rows) == to_csv(run_sweep(spec)));
}

TEST_CASE("CSV round trip") {
  SweepSpec spec = toy_spec({Method::Fqe, Method::Robust}, {1.1, 7.0}, {1.5});
  const std::vector<BoundResult> rows = run_sweep(spec);
  std::istringstream in(to_csv(rows));
  const std::vector<BoundResult> back = read_csv(in);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].env == rows[i].env);
    CHECK(back[i].method == rows[i].method);
    CHECK(back[i].gamma == rows[i].gamma);
    CHECK(back[i].bound == rows[i].bound);
    CHECK(back[i].nominal_value == rows[i].nominal_value);
    CHECK(back[i].horizon == rows[i].horizon);
  }
  std::istringstream bad("env,method\ntoy,fqe\n");
  CHECK_THROWS_AS(read_csv(bad), ValidationError);
}

TEST_CASE("format_number gives the shortest round-trip form") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(2.0) == "2");
  CHECK(format_number(1e6) == "1e+06");
  CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("paired zips and broadcasts") {
  using P = std::pair<double, double>;
  CHECK(paired({2, 10}, {2, 10}) == std::vector<P>{{2, 2}, {10, 10}});
  CHECK(paired({2}, {1, 3}) == std::vector<P>{{2, 1}, {2, 3}});
  CHECK_THROWS_AS(paired({1, 2}, {1, 2, 3}), ParameterError);
}

TEST_CASE("tightness rows carry a gap column") {
  SweepSpec spec = toy_spec({Method::Robust}, {2.0}, {2.0});
  const std::vector<BoundResult> rows = run_tightness(spec, {1, 5});
  REQUIRE(rows.size() == 2);
  for (const BoundResult& row : rows) {
    REQUIRE(row.gap.has_value());
    CHECK(std::abs(*row.gap) <= 1e-6);
  }
  const std::string csv = to_csv(rows, true);
  CHECK(csv.rfind(std::string(kCsvHeader) + ",gap\n", 0) == 0);
}

TEST_CASE("horizon rows cover t = 1..T and the Gamma curves are ordered") {
  SweepSpec spec{steady_state_transform(load_env("ope-graph"))};
  spec.methods = {Method::Robust};
  spec.gammas = {1.5, 2.0, 10.0};
  spec.deltas = {1e6};
  spec.horizon = 12;
  spec.timing = false;
  const std::vector<BoundResult> rows = run_horizon(spec);
  REQUIRE(rows.size() == 36);
  for (std::size_t t = 0; t < 12; ++t) {
    CHECK(rows[t].horizon == t + 1);
    CHECK(rows[24 + t].bound <= rows[12 + t].bound + 1e-9);
    CHECK(rows[12 + t].bound <= rows[t].bound + 1e-9);
  }
}

TEST_CASE("single-step report runs at the audited parameters") {
  SweepSpec spec = toy_spec({Method::SingleStep}, {1.0}, {1.0});
  InjectionOptions opts;
  opts.horizon = 5;
  const SingleStepReport rep = run_single_step(spec, opts);
  REQUIRE(rep.rows.size() == 2);
  CHECK(rep.audited.gamma <= 2.0 + 1e-9);
  CHECK(rep.audited.delta <= 2.0 + 1e-9);
  const BoundResult& single = rep.rows[0].method == Method::SingleStep ? rep.rows[0] : rep.rows[1];
  const BoundResult& robust = rep.rows[0].method == Method::SingleStep ? rep.rows[1] : rep.rows[0];
  CHECK(single.gamma == rep.audited.gamma);
  CHECK(single.bound >= robust.bound - 1e-9);
  CHECK(single.bound <= single.nominal_value + 1e-9);
  CHECK(std::abs(single.nominal_value - single.bound) <
        0.6 * std::abs(single.nominal_value - single.behavior_value));
}

TEST_CASE("spec validation") {
  SweepSpec spec = toy_spec({Method::Fqe}, {}, {1.0});
  CHECK_THROWS_AS(spec.validate(), ParameterError);
  spec.gammas = {0.5};
  CHECK_THROWS_AS(spec.validate(), ParameterError);
  spec.gammas = {1.0};
  CHECK_NOTHROW(spec.validate());
  CHECK_THROWS_AS(parse_method("lp"), ParameterError);
  CHECK(parse_method("single-step") == Method::SingleStep);
}

TEST_CASE("plot rendering") {
  CHECK_THROWS_AS(render_svg(std::vector<BoundResult>{}), ValidationError);

  const std::vector<BoundResult> one = run_sweep(toy_spec({Method::Fqe}, {2.0}, {1.0}));
  const std::string svg = render_svg(one);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(count(svg, "stroke-dasharray=\"2,3\"") >= 2);
  CHECK(count(svg, "<circle") >= 1);

  const std::vector<BoundResult> rows = run_sweep(
      toy_spec({Method::Fqe, Method::Robust}, {1.1, 2.0, 5.0, 10.0}, {1.1, 2.0, 10.0}));
  PlotOptions opts;
  opts.title = "toy";
  const std::string chart = render_svg(rows, opts);
  CHECK(chart == render_svg(rows, opts));
  CHECK(count(chart, "<polyline") >= 4);
  CHECK(chart.find("stroke=\"#000000\"") != std::string::npos);
}

TEST_CASE("model JSON round trips") {
  const BenchmarkEnv env = load_env("ope-mc");
  const TabularMDP back = mdp_from_json(to_json(env.mdp));
  CHECK(back.transitions() == env.mdp.transitions());
  CHECK(back.initial_dist() == env.mdp.initial_dist());

  InjectionOptions opts;
  const ConfoundedMDP cm = inject_confounding(env.mdp, env.pi_b, opts).model;
  const ConfoundedMDP cm_back = confounded_from_json(to_json(cm));
  CHECK(cm_back.transitions_u() == cm.transitions_u());
  CHECK(cm_back.behavior_u() == cm.behavior_u());
  CHECK(cm_back.p_u() == cm.p_u());

  CHECK_THROWS_AS(mdp_from_json("{\"n_states\": 2}"), ValidationError);
  CHECK_THROWS_AS(mdp_from_json("not json"), ValidationError);
  CHECK_THROWS_AS(env_from_json(to_json(env.mdp), "x"), ValidationError);
}
