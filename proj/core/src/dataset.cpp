#include "confope/dataset.hpp"

#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "confope/error.hpp"

namespace confope {

namespace {

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t draw(std::span<const double> probs, double u) {
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    acc += probs[i];
    last = i;
    if (u < acc) return i;
  }
  return last;
}

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

bool EmpiricalModel::state_visited(std::size_t x) const {
  for (std::size_t a = 0; a < n_actions(); ++a) {
    if (is_supported(x, a)) return true;
  }
  return false;
}

std::vector<Trajectory> simulate(const ConfoundedMDP& cm, std::size_t n_trajectories,
                                 std::size_t horizon, std::uint64_t seed,
                                 ConfounderTrace* trace) {
  if (n_trajectories == 0 || horizon == 0) {
    throw ParameterError("simulate: need at least one trajectory of length >= 1");
  }
  std::vector<Trajectory> out(n_trajectories);
  if (trace) trace->assign(n_trajectories, {});
  std::vector<double> behavior_row(cm.n_actions());
  for (std::size_t i = 0; i < n_trajectories; ++i) {
    std::mt19937_64 rng(splitmix64(seed ^ splitmix64(i)));
    Trajectory& traj = out[i];
    traj.reserve(horizon);
    std::size_t x = draw(cm.initial_dist(), uniform01(rng));
    for (std::size_t t = 0; t < horizon; ++t) {
      const std::size_t u = uniform01(rng) < cm.p_u() ? 1 : 0;
      const std::size_t a = draw(cm.behavior_u().row(x, u), uniform01(rng));
      const std::size_t next = draw(cm.transitions_u().row(x, u, a), uniform01(rng));
      traj.push_back(Step{x, a, next, cm.rewards()(x, a, next)});
      if (trace) (*trace)[i].push_back(static_cast<std::uint8_t>(u));
      x = next;
    }
  }
  return out;
}

EmpiricalModel estimate(std::span<const Trajectory> data, std::size_t n_states,
                        std::size_t n_actions) {
  if (data.empty()) throw ParameterError("estimate: empty dataset");
  std::vector<std::uint64_t> n_xa(n_states * n_actions, 0);
  std::vector<std::uint64_t> n_xay(n_states * n_actions * n_states, 0);
  for (const Trajectory& traj : data) {
    for (const Step& s : traj) {
      if (s.x >= n_states || s.x_next >= n_states || s.a >= n_actions) {
        throw DimensionError("estimate: step outside the declared state/action space");
      }
      ++n_xa[s.x * n_actions + s.a];
      ++n_xay[(s.x * n_actions + s.a) * n_states + s.x_next];
    }
  }
  EmpiricalModel m;
  m.mode = DataMode::Sampled;
  m.pi_hat = Matrix({n_states, n_actions});
  m.p_hat = Tensor3({n_states, n_actions, n_states});
  m.counts = n_xa;
  m.supported.assign(n_states * n_actions, false);
  for (std::size_t x = 0; x < n_states; ++x) {
    std::uint64_t n_x = 0;
    for (std::size_t a = 0; a < n_actions; ++a) n_x += n_xa[x * n_actions + a];
    for (std::size_t a = 0; a < n_actions; ++a) {
      const std::uint64_t n = n_xa[x * n_actions + a];
      if (n == 0) continue;
      m.supported[x * n_actions + a] = true;
      m.pi_hat(x, a) = static_cast<double>(n) / static_cast<double>(n_x);
      for (std::size_t y = 0; y < n_states; ++y) {
        m.p_hat(x, a, y) = static_cast<double>(n_xay[(x * n_actions + a) * n_states + y]) /
                           static_cast<double>(n);
      }
    }
  }
  return m;
}

EmpiricalModel population_model(const ConfoundedMDP& cm) {
  MarginalModel marg = marginalize(cm);
  EmpiricalModel m;
  m.mode = DataMode::Population;
  m.pi_hat = marg.behavior.probs();
  m.p_hat = std::move(marg.apparent_marginal);
  m.supported = std::move(marg.apparent_defined);
  return m;
}

void write_dataset_csv(std::ostream& out, std::span<const Trajectory> data) {
  out << "traj_id,t,x,a,x_next,r\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t t = 0; t < data[i].size(); ++t) {
      const Step& s = data[i][t];
      out << i << ',' << t << ',' << s.x << ',' << s.a << ',' << s.x_next << ','
          << format_double(s.r) << '\n';
    }
  }
}

std::vector<Trajectory> read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "traj_id,t,x,a,x_next,r") {
    throw ValidationError("dataset CSV: expected header traj_id,t,x,a,x_next,r");
  }
  std::vector<Trajectory> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(fields, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6) {
      throw ValidationError("dataset CSV line " + std::to_string(line_no) + ": expected 6 fields");
    }
    try {
      const std::size_t id = std::stoull(cells[0]);
      const std::size_t t = std::stoull(cells[1]);
      Step s{std::stoull(cells[2]), std::stoull(cells[3]), std::stoull(cells[4]),
             std::stod(cells[5])};
      if (id >= out.size()) out.resize(id + 1);
      if (t != out[id].size()) {
        throw ValidationError("dataset CSV line " + std::to_string(line_no) +
                              ": steps out of order");
      }
      out[id].push_back(s);
    } catch (const std::logic_error&) {
      throw ValidationError("dataset CSV line " + std::to_string(line_no) + ": bad number");
    }
  }
  return out;
}

}  // namespace confope
