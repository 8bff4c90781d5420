#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "loopkit/model.hpp"

namespace loopkit::testing {

// 2-state reference chain: m = 1, q(a,b) = q(b,a) = 1, kill = 1.
inline FiniteChainModel two_state_chain() {
  return FiniteChainModel::build({"a", "b"}, {1.0, 1.0}, {{"a", "b", 1.0}, {"b", "a", 1.0}}, {1.0, 1.0});
}

// 1-state chain killed at rate 2.
inline FiniteChainModel one_state_chain() {
  return FiniteChainModel::build({"a"}, {1.0}, {}, {2.0});
}

// Asymmetric 3-state chain killed only at a, with a rotational drift.
inline FiniteChainModel asymmetric_three_state_chain() {
  return FiniteChainModel::build({"a", "b", "c"}, {1.0, 2.0, 0.5},
                                 {{"a", "b", 2.0}, {"b", "c", 3.0}, {"c", "a", 1.5},
                                  {"b", "a", 0.5}, {"c", "b", 0.25}},
                                 {1.0, 0.0, 0.0});
}

// The same chain with every rate ten times faster: loops live about 0.3,
// so a 0.1 error in the rotation period is visible.
inline FiniteChainModel fast_asymmetric_chain() {
  return FiniteChainModel::build({"a", "b", "c"}, {1.0, 2.0, 0.5},
                                 {{"a", "b", 20.0}, {"b", "c", 30.0}, {"c", "a", 15.0},
                                  {"b", "a", 5.0}, {"c", "b", 2.5}},
                                 {10.0, 0.0, 0.0});
}

// Random irreducible transient chain with n states.
inline FiniteChainModel random_chain(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> rate(0.1, 2.0);
  std::uniform_real_distribution<double> weight(0.5, 2.0);
  std::vector<std::string> ids;
  std::vector<double> m, kill;
  std::vector<Rate> rates;
  for (std::size_t i = 0; i < n; ++i) {
    ids.push_back("s" + std::to_string(i));
    m.push_back(weight(rng));
    kill.push_back(i == 0 ? rate(rng) : (rng() % 2 == 0 ? 0.0 : rate(rng)));
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) rates.push_back({ids[i], ids[j], rate(rng)});
    }
  }
  return FiniteChainModel::build(ids, m, rates, kill);
}

// e^A by scaling and squaring of a truncated Taylor series; used as an
// oracle independent of Eigen's Pade-based matrix exponential.
inline Matrix taylor_exp(const Matrix& a) {
  int squarings = 0;
  double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  while (norm > 0.5) {
    norm *= 0.5;
    ++squarings;
  }
  const Matrix scaled = a / std::ldexp(1.0, squarings);
  Matrix term = Matrix::Identity(a.rows(), a.cols());
  Matrix sum = term;
  for (int k = 1; k < 30; ++k) {
    term = term * scaled / k;
    sum += term;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

}  // namespace loopkit::testing
