#include "confope/serialization.hpp"

#include <json.hpp>

#include "confope/error.hpp"

namespace confope {

namespace {

using nlohmann::json;

template <std::size_t Rank>
json nested(const NdArray<Rank>& arr) {
  const auto& shape = arr.shape();
  const auto flat = arr.flat();
  // Build from the innermost axis outwards.
  std::vector<json> level;
  level.reserve(flat.size());
  for (double v : flat) level.emplace_back(v);
  for (std::size_t axis = Rank; axis-- > 0;) {
    const std::size_t n = shape[axis];
    std::vector<json> up;
    up.reserve(n == 0 ? 0 : level.size() / n);
    for (std::size_t i = 0; i < level.size(); i += n) {
      json row = json::array();
      for (std::size_t k = 0; k < n; ++k) row.push_back(std::move(level[i + k]));
      up.push_back(std::move(row));
    }
    level = std::move(up);
  }
  return level.empty() ? json::array() : level.front();
}

template <std::size_t Rank>
NdArray<Rank> unnest(const json& node, const typename NdArray<Rank>::Shape& shape,
                     const char* what) {
  NdArray<Rank> out(shape);
  std::vector<double> flat;
  flat.reserve(out.size());
  auto walk = [&](auto&& self, const json& j, std::size_t axis) -> void {
    if (!j.is_array() || j.size() != shape[axis]) {
      throw ValidationError(std::string(what) + ": wrong shape at axis " + std::to_string(axis));
    }
    for (const json& child : j) {
      if (axis + 1 == Rank) {
        if (!child.is_number()) throw ValidationError(std::string(what) + ": non-numeric entry");
        flat.push_back(child.get<double>());
      } else {
        self(self, child, axis + 1);
      }
    }
  };
  walk(walk, node, 0);
  std::copy(flat.begin(), flat.end(), out.flat().begin());
  return out;
}

const json& field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ValidationError(std::string("JSON: missing field '") + key + "'");
  return *it;
}

json parse(const std::string& text) {
  try {
    json j = json::parse(text);
    if (!j.is_object()) throw ValidationError("JSON: top level must be an object");
    return j;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("JSON: ") + e.what());
  }
}

json mdp_json(const TabularMDP& mdp) {
  json j;
  j["n_states"] = mdp.n_states();
  j["n_actions"] = mdp.n_actions();
  j["gamma"] = mdp.discount();
  j["initial_dist"] = mdp.initial_dist();
  j["transitions"] = nested(mdp.transitions());
  j["rewards"] = nested(mdp.rewards());
  return j;
}

template <typename Fn>
auto guarded(Fn fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("JSON: ") + e.what());
  }
}

TabularMDP mdp_from(const json& j) {
  return guarded([&] {
    const auto nx = field(j, "n_states").get<std::size_t>();
    const auto na = field(j, "n_actions").get<std::size_t>();
    Tensor3 p = unnest<3>(field(j, "transitions"), {nx, na, nx}, "transitions");
    Tensor3 r = unnest<3>(field(j, "rewards"), {nx, na, nx}, "rewards");
    auto init = field(j, "initial_dist").get<std::vector<double>>();
    return TabularMDP(std::move(p), std::move(r), std::move(init), field(j, "gamma").get<double>());
  });
}

}  // namespace

std::string to_json(const TabularMDP& mdp) { return mdp_json(mdp).dump(2); }

std::string to_json(const ConfoundedMDP& cm) {
  MarginalModel marg = marginalize(cm);
  json j = mdp_json(marg.mdp);
  j["p_u"] = cm.p_u();
  j["transitions_u"] = nested(cm.transitions_u());
  j["behavior_u"] = nested(cm.behavior_u());
  return j.dump(2);
}

std::string to_json(const BenchmarkEnv& env) {
  json j = mdp_json(env.mdp);
  j["name"] = env.name;
  j["horizon"] = env.default_horizon;
  j["pi_b"] = nested(env.pi_b.probs());
  j["pi_e"] = nested(env.pi_e.probs());
  return j.dump(2);
}

TabularMDP mdp_from_json(const std::string& text) { return mdp_from(parse(text)); }

ConfoundedMDP confounded_from_json(const std::string& text) {
  const json j = parse(text);
  return guarded([&] {
    const auto nx = field(j, "n_states").get<std::size_t>();
    const auto na = field(j, "n_actions").get<std::size_t>();
    constexpr std::size_t nu = kNumConfounderValues;
    Tensor4 tu = unnest<4>(field(j, "transitions_u"), {nx, nu, na, nx}, "transitions_u");
    Tensor3 bu = unnest<3>(field(j, "behavior_u"), {nx, nu, na}, "behavior_u");
    Tensor3 r = unnest<3>(field(j, "rewards"), {nx, na, nx}, "rewards");
    auto init = field(j, "initial_dist").get<std::vector<double>>();
    return ConfoundedMDP(std::move(tu), std::move(bu), field(j, "p_u").get<double>(),
                         std::move(r), std::move(init), field(j, "gamma").get<double>());
  });
}

BenchmarkEnv env_from_json(const std::string& text, const std::string& fallback_name) {
  const json j = parse(text);
  TabularMDP mdp = mdp_from(j);
  return guarded([&] {
    const std::size_t nx = mdp.n_states();
    const std::size_t na = mdp.n_actions();
    PolicyTable pi_e(unnest<2>(field(j, "pi_e"), {nx, na}, "pi_e"));
    PolicyTable pi_b = j.contains("pi_b") ? PolicyTable(unnest<2>(j["pi_b"], {nx, na}, "pi_b"))
                                          : PolicyTable::uniform(nx, na);
    const std::size_t horizon = j.value("horizon", std::size_t{1});
    std::string name = j.value("name", fallback_name);
    return make_env(std::move(name), std::move(mdp), std::move(pi_b), std::move(pi_e), horizon);
  });
}

}  // namespace confope
