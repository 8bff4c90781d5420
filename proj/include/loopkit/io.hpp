#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "loopkit/kernel_grid.hpp"
#include "loopkit/model.hpp"
#include "loopkit/permutations.hpp"
#include "loopkit/revuz.hpp"

namespace loopkit {

// Model definition file:
//   {"type":"finite_chain","states":[...],"m":{...},"rates":[[x,y,rate],...],"kill":{...},
//    "revuz":{"name":..., "atoms":{state:weight}} | [...]}
//   {"type":"killed_bm","dim":3,"kappa":1.0,"box":[[lo,hi],...]}
struct ModelFile {
  Model model;
  std::vector<RevuzMeasure> revuz;
};

// One moment / functional specification. Function entries are
//   {"state":"a"} | {"values":{"a":1.0,...}}            on finite chains
//   {"box":[[lo,hi],...]} | {"gaussian":{"center":[...],"sigma":s}}   in R^d
struct FunctionalSpec {
  std::string id;
  std::vector<TestFunction> functions;
  Regime regime = Regime::cyclic_classes;
  double alpha = 0.0;
  std::optional<State> root;
  std::vector<double> rates;  // per-function Laplace exponents (subordination)
  std::vector<double> times;  // invariance times
  double shift = 0.0;
  bool broken_rotation = false;
};

// Either a single spec object or {"specs":[...]}; "n_list" may sit at the top.
struct SpecFile {
  std::vector<FunctionalSpec> specs;
  std::vector<double> n_list;
};

/// MalformedInput on syntax errors, unknown keys, wrong types or unknown
/// states; model construction errors (NonTransient, ...) pass through.
ModelFile parse_model(std::string_view text);
SpecFile parse_spec(std::string_view text, const Model& model);

ModelFile load_model(const std::string& path);
SpecFile load_spec(const std::string& path, const Model& model);

std::string read_file(const std::string& path);

}  // namespace loopkit
