#include "loopkit/io.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "loopkit/errors.hpp"

namespace loopkit {
namespace {

using json = nlohmann::json;

[[noreturn]] void malformed(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::MalformedInput, where + ": " + what);
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedInput, e.what());
  }
}

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) malformed(where, "expected an object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) malformed(where, "unknown key \"" + key + "\"");
  }
}

const json& require(const json& j, const std::string& where, const char* key) {
  if (!j.contains(key)) malformed(where, std::string("missing \"") + key + "\"");
  return j.at(key);
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) malformed(where, "expected a number");
  return j.get<double>();
}

std::string string(const json& j, const std::string& where) {
  if (!j.is_string()) malformed(where, "expected a string");
  return j.get<std::string>();
}

std::vector<double> numbers(const json& j, const std::string& where) {
  if (!j.is_array()) malformed(where, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], where + "/" + std::to_string(i)));
  return out;
}

std::size_t state_index(const FiniteChainModel& chain, const json& j, const std::string& where) {
  const std::string id = string(j, where);
  for (std::size_t i = 0; i < chain.size(); ++i) {
    if (chain.state_ids()[i] == id) return i;
  }
  malformed(where, "unknown state \"" + id + "\"");
}

// {state: value} over the chain's states; missing states are zero.
Vector state_map(const FiniteChainModel& chain, const json& j, const std::string& where) {
  if (!j.is_object()) malformed(where, "expected an object keyed by state");
  Vector v = Vector::Zero(static_cast<Eigen::Index>(chain.size()));
  for (const auto& [key, value] : j.items()) {
    const auto i = static_cast<Eigen::Index>(state_index(chain, json(key), where));
    v[i] = number(value, where + "/" + key);
  }
  return v;
}

Box parse_box(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty() || j.size() > 3) malformed(where, "expected 1 to 3 [lo, hi] pairs");
  Box box;
  box.dim = static_cast<int>(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto pair = numbers(j[i], where + "/" + std::to_string(i));
    if (pair.size() != 2 || !(pair[0] < pair[1])) malformed(where + "/" + std::to_string(i), "expected [lo, hi] with lo < hi");
    box.lo[i] = pair[0];
    box.hi[i] = pair[1];
  }
  return box;
}

Point parse_point(const json& j, int dim, const std::string& where) {
  const auto xs = numbers(j, where);
  if (static_cast<int>(xs.size()) != dim) malformed(where, "expected " + std::to_string(dim) + " coordinates");
  Point p;
  for (std::size_t i = 0; i < xs.size(); ++i) p[i] = xs[i];
  return p;
}

RevuzMeasure parse_revuz(const FiniteChainModel& chain, const json& j, const std::string& where) {
  only_keys(j, where, {"name", "atoms", "density"});
  const std::string name = j.contains("name") ? string(j["name"], where + "/name") : std::string{};
  if (j.contains("atoms") == j.contains("density")) malformed(where, "give exactly one of \"atoms\" and \"density\"");
  RevuzMeasure nu = j.contains("atoms") ? RevuzMeasure::from_atoms(state_map(chain, j["atoms"], where + "/atoms"), name)
                                        : RevuzMeasure::from_density(chain, state_map(chain, j["density"], where + "/density"), name);
  if ((nu.atoms.array() < 0.0).any()) malformed(where, "weights must be >= 0");
  return nu;
}

ModelFile parse_chain(const json& j) {
  only_keys(j, "model", {"type", "states", "m", "rates", "kill", "revuz"});
  const json& states_j = require(j, "model", "states");
  if (!states_j.is_array() || states_j.empty()) malformed("model/states", "expected a nonempty array");
  std::vector<std::string> states;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < states_j.size(); ++i) {
    states.push_back(string(states_j[i], "model/states/" + std::to_string(i)));
    if (!seen.insert(states.back()).second) malformed("model/states", "duplicate state \"" + states.back() + "\"");
  }
  auto lookup = [&](const std::string& id, const std::string& where) {
    if (!seen.count(id)) malformed(where, "unknown state \"" + id + "\"");
  };

  const json& m_j = require(j, "model", "m");
  if (!m_j.is_object()) malformed("model/m", "expected an object keyed by state");
  std::vector<double> m(states.size(), 0.0), kill(states.size(), 0.0);
  auto index = [&](const std::string& id) {
    return static_cast<std::size_t>(std::find(states.begin(), states.end(), id) - states.begin());
  };
  for (const auto& [key, value] : m_j.items()) {
    lookup(key, "model/m");
    m[index(key)] = number(value, "model/m/" + key);
  }
  for (const auto& s : states) {
    if (!m_j.contains(s)) malformed("model/m", "no weight for state \"" + s + "\"");
  }

  std::vector<Rate> rates;
  if (j.contains("rates")) {
    const json& r = j["rates"];
    if (!r.is_array()) malformed("model/rates", "expected an array of [from, to, rate]");
    for (std::size_t i = 0; i < r.size(); ++i) {
      const std::string where = "model/rates/" + std::to_string(i);
      if (!r[i].is_array() || r[i].size() != 3) malformed(where, "expected [from, to, rate]");
      Rate rate{string(r[i][0], where + "/0"), string(r[i][1], where + "/1"), number(r[i][2], where + "/2")};
      lookup(rate.from, where);
      lookup(rate.to, where);
      rates.push_back(rate);
    }
  }
  if (j.contains("kill")) {
    const json& k = j["kill"];
    if (!k.is_object()) malformed("model/kill", "expected an object keyed by state");
    for (const auto& [key, value] : k.items()) {
      lookup(key, "model/kill");
      kill[index(key)] = number(value, "model/kill/" + key);
    }
  }

  ModelFile file{FiniteChainModel::build(states, m, rates, kill), {}};
  const auto& chain = std::get<FiniteChainModel>(file.model);
  if (j.contains("revuz")) {
    const json& r = j["revuz"];
    if (r.is_array()) {
      for (std::size_t i = 0; i < r.size(); ++i) file.revuz.push_back(parse_revuz(chain, r[i], "model/revuz/" + std::to_string(i)));
    } else {
      file.revuz.push_back(parse_revuz(chain, r, "model/revuz"));
    }
  }
  return file;
}

ModelFile parse_bm(const json& j) {
  only_keys(j, "model", {"type", "dim", "kappa", "box"});
  const json& d = require(j, "model", "dim");
  if (!d.is_number_integer()) malformed("model/dim", "expected an integer");
  const int dim = d.get<int>();
  const double kappa = number(require(j, "model", "kappa"), "model/kappa");
  std::optional<Box> box;
  if (j.contains("box")) {
    box = parse_box(j["box"], "model/box");
    if (box->dim != dim) malformed("model/box", "dimension does not match dim");
  }
  return ModelFile{KilledBrownianModel(dim, kappa, box), {}};
}

TestFunction parse_function(const Model& model, const json& j, const std::string& where) {
  if (const auto* chain = std::get_if<FiniteChainModel>(&model)) {
    only_keys(j, where, {"state", "values"});
    if (j.contains("state") == j.contains("values")) malformed(where, "give exactly one of \"state\" and \"values\"");
    if (j.contains("state")) return TestFunction::state_indicator(state_index(*chain, j["state"], where + "/state"), chain->size());
    return TestFunction::on_states(state_map(*chain, j["values"], where + "/values"));
  }
  const auto& bm = std::get<KilledBrownianModel>(model);
  only_keys(j, where, {"box", "gaussian"});
  if (j.contains("box") == j.contains("gaussian")) malformed(where, "give exactly one of \"box\" and \"gaussian\"");
  if (j.contains("box")) {
    const Box box = parse_box(j["box"], where + "/box");
    if (box.dim != bm.dim()) malformed(where + "/box", "dimension does not match the model");
    return TestFunction::box_indicator(box);
  }
  const json& g = j["gaussian"];
  only_keys(g, where + "/gaussian", {"center", "sigma"});
  const Point c = parse_point(require(g, where + "/gaussian", "center"), bm.dim(), where + "/gaussian/center");
  const double sigma = number(require(g, where + "/gaussian", "sigma"), where + "/gaussian/sigma");
  if (!(sigma > 0.0)) malformed(where + "/gaussian/sigma", "must be > 0");
  return TestFunction::gaussian_bump(c, sigma, bm.dim());
}

FunctionalSpec parse_one(const Model& model, const json& j, const std::string& where, std::size_t ordinal) {
  only_keys(j, where, {"id", "functions", "k", "regime", "alpha", "root", "rates", "times", "shift",
                       "broken_rotation", "n_list"});
  FunctionalSpec spec;
  spec.id = j.contains("id") ? string(j["id"], where + "/id") : "s" + std::to_string(ordinal);
  const json& fs = require(j, where, "functions");
  if (!fs.is_array() || fs.empty()) malformed(where + "/functions", "expected a nonempty array");
  for (std::size_t i = 0; i < fs.size(); ++i) {
    spec.functions.push_back(parse_function(model, fs[i], where + "/functions/" + std::to_string(i)));
  }
  if (j.contains("k")) {
    if (!j["k"].is_number_integer() || j["k"].get<int>() < 1) malformed(where + "/k", "expected an integer >= 1");
    const auto k = j["k"].get<std::size_t>();
    // one function and k > 1 means the k-th power of its occupation time
    if (spec.functions.size() == 1) spec.functions.assign(k, spec.functions.front());
    if (spec.functions.size() != k) malformed(where + "/k", "does not match the number of functions");
  }
  if (j.contains("regime")) {
    try {
      spec.regime = regime_from_string(string(j["regime"], where + "/regime"));
    } catch (const Error& e) {
      malformed(where + "/regime", e.what());
    }
  }
  if (j.contains("alpha")) spec.alpha = number(j["alpha"], where + "/alpha");
  if (spec.alpha < 0.0) malformed(where + "/alpha", "must be >= 0");
  if (j.contains("root")) {
    if (const auto* chain = std::get_if<FiniteChainModel>(&model)) {
      spec.root = State{state_index(*chain, j["root"], where + "/root")};
    } else {
      spec.root = State{parse_point(j["root"], std::get<KilledBrownianModel>(model).dim(), where + "/root")};
    }
  }
  if (j.contains("rates")) {
    spec.rates = numbers(j["rates"], where + "/rates");
    if (spec.rates.size() != spec.functions.size()) malformed(where + "/rates", "need one rate per function");
  }
  if (j.contains("times")) {
    spec.times = numbers(j["times"], where + "/times");
    if (spec.times.size() != spec.functions.size()) malformed(where + "/times", "need one time per function");
  }
  if (j.contains("shift")) spec.shift = number(j["shift"], where + "/shift");
  if (j.contains("broken_rotation")) {
    if (!j["broken_rotation"].is_boolean()) malformed(where + "/broken_rotation", "expected a boolean");
    spec.broken_rotation = j["broken_rotation"].get<bool>();
  }
  return spec;
}

}  // namespace

ModelFile parse_model(std::string_view text) {
  const json j = parse_json(text);
  if (!j.is_object()) malformed("model", "expected an object");
  const std::string type = string(require(j, "model", "type"), "model/type");
  if (type == "finite_chain") return parse_chain(j);
  if (type == "killed_bm") return parse_bm(j);
  malformed("model/type", "expected \"finite_chain\" or \"killed_bm\"");
}

SpecFile parse_spec(std::string_view text, const Model& model) {
  const json j = parse_json(text);
  if (!j.is_object()) malformed("spec", "expected an object");
  SpecFile file;
  if (j.contains("n_list")) {
    file.n_list = numbers(j["n_list"], "spec/n_list");
    for (double n : file.n_list) {
      if (!(n > 0.0)) malformed("spec/n_list", "entries must be > 0");
    }
  }
  if (j.contains("specs")) {
    only_keys(j, "spec", {"specs", "n_list"});
    const json& list = j["specs"];
    if (!list.is_array() || list.empty()) malformed("spec/specs", "expected a nonempty array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      file.specs.push_back(parse_one(model, list[i], "spec/specs/" + std::to_string(i), i));
    }
  } else {
    file.specs.push_back(parse_one(model, j, "spec", 0));
  }
  std::set<std::string> ids;
  for (const auto& s : file.specs) {
    if (!ids.insert(s.id).second) malformed("spec", "duplicate id \"" + s.id + "\"");
  }
  return file;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MalformedInput, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ModelFile load_model(const std::string& path) { return parse_model(read_file(path)); }

SpecFile load_spec(const std::string& path, const Model& model) { return parse_spec(read_file(path), model); }

}  // namespace loopkit
