#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "loopkit/model.hpp"

namespace loopkit {

// Bounded, compactly supported function on the state space.
class TestFunction {
 public:
  enum class Kind { state_values, box_indicator, gaussian_bump };

  static TestFunction on_states(Vector values);
  static TestFunction state_indicator(std::size_t state, std::size_t num_states);
  static TestFunction box_indicator(const Box& box);
  // exp(-|x - c|^2 / (2 sigma^2)) cut off outside the box c +- 4 sigma.
  static TestFunction gaussian_bump(const Point& center, double sigma, int dim);

  Kind kind() const { return kind_; }
  const Vector& values() const { return values_; }
  const Box& support() const { return support_; }

  double operator()(std::size_t state) const;
  double operator()(const Point& x) const;
  // Average over a cell; exact for box indicators.
  double cell_average(const Box& cell) const;
  bool is_zero() const;

 private:
  Kind kind_ = Kind::state_values;
  Vector values_;
  Box support_;
  Point center_;
  double sigma_ = 1.0;
};

// A discretisation of (S, m, u^alpha) on finitely many nodes. For finite
// chains the nodes are the states and every quantity is exact. For the
// killed Brownian model the nodes are the cells of a regular grid: kernels
// between cells are sampled at the centres, the diagonal is the mean of
// u^alpha over the cell, root vectors and the 2-cycle product are exact
// cell averages, and the z-integrated kernel uses its closed form.
class KernelGrid {
 public:
  virtual ~KernelGrid() = default;

  virtual std::size_t size() const = 0;
  // m-mass attached to each node.
  virtual const Vector& weights() const = 0;
  virtual Matrix kernel(double alpha) const = 0;
  // int u^alpha(x_i, z) u^alpha(z, x_j) m(dz) over the whole state space.
  virtual Matrix second_order(double alpha) const = 0;
  // int u^a(x_i, z) u^b(z, x_j) m(dz) over the whole state space.
  virtual Matrix joined(double a, double b) const = 0;
  // Node-pair value of u^alpha(x, y) u^alpha(y, x): the 2-cycle integrand,
  // averaged over both cells on euclidean grids.
  virtual Matrix pair_product(double alpha) const = 0;
  // u^alpha(root, x) u^alpha(x, root) per node, cell-averaged on euclidean grids.
  virtual Vector root_pair(double alpha, const State& root) const = 0;
  virtual Vector sample(const TestFunction& f) const = 0;
  // u^alpha(root, x_j) and u^alpha(x_j, root) as node vectors.
  virtual Vector root_row(double alpha, const State& root) const = 0;
  virtual Vector root_col(double alpha, const State& root) const = 0;
  virtual bool exact() const = 0;
};

struct GridOptions {
  // Cells per axis of the euclidean grid; 0 picks a dimension default.
  int cells_per_axis = 0;
};

std::unique_ptr<KernelGrid> make_grid(const FiniteChainModel& chain);
std::unique_ptr<KernelGrid> make_grid(const KilledBrownianModel& bm, const Box& region, int cells_per_axis);

/// Default cells per axis for the euclidean grid of dimension d.
int default_cells_per_axis(int dim);

/// Smallest box containing the supports of all functions.
Box bounding_support(const std::vector<TestFunction>& functions);

}  // namespace loopkit
