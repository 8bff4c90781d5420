#pragma once

#include <vector>

#include "loopkit/assumptions.hpp"
#include "loopkit/kernel_grid.hpp"
#include "loopkit/model.hpp"
#include "loopkit/moments.hpp"

namespace loopkit {

// Time change by a compound Poisson subordinator with rate n and
// exponential jumps of mean 1/n. Between jumps the subordinated process
// sits still, so its potential is a rescaled base potential.

/// (1 + alpha/n)^-2 u^{alpha/(1+alpha/n)}(x, y). alpha >= 0, n > 0.
double subordinated_potential(const Model& model, double n, double alpha, const State& x, const State& y);

/// Matrix of u_(n)^alpha(x, y) on a finite chain.
Matrix subordinated_kernel_matrix(const FiniteChainModel& chain, double n, double alpha);

struct SubordinatedTransition {
  // P_t of the subordinated chain, no-jump part included.
  Matrix matrix;
  // e^{-nt}: the chance of no jump by time t, carried on the diagonal.
  double atom = 0.0;
  // Series terms summed.
  int terms = 0;

  // matrix - atom * I: the part of P_t that has a density against m.
  Matrix jump_part() const;
};

/// e^{-nt} sum_j (nt)^j / j! R^j with R = n (nI - G)^-1, summed until the
/// Poisson tail drops below 1e-14. t >= 0, n > 0.
SubordinatedTransition subordinated_transition(const FiniteChainModel& chain, double n, double t);

/// int_0^inf e^{-alpha t} (P_t - e^{-nt} I) dt diag(m)^-1, entry by entry
/// with adaptive quadrature over the series P_t. Should equal
/// subordinated_kernel_matrix.
Matrix subordinated_laplace_transform(const FiniteChainModel& chain, double n, double alpha,
                                      double rel_tol = 1e-12);

/// u_(n)^alpha(x, y) <= u(x, y) on every sampled pair with x != y. `value`
/// is the largest ratio u_(n)^alpha / u seen.
CheckReport check_domination(const Model& model, double n, double alpha,
                             const std::vector<std::pair<State, State>>& samples);

struct LaplaceSpec {
  std::vector<TestFunction> functions;
  double alpha = 1.0;
  // One time-discount rate per function.
  std::vector<double> rates;
};

/// int prod_j e^{-alpha_j t_j} nu_(n)(prod_j f_j(X_{t_j}) e^{-alpha zeta}) dt
/// for the subordinated model; n = +inf gives the base model.
MomentValue laplace_nu_moment(const Model& model, const LaplaceSpec& spec, double n,
                              GridOptions options = {});

struct ConvergenceRow {
  double n = 0.0;
  double value = 0.0;
  double error_estimate = 0.0;
  double deviation = 0.0;  // |value - limit|
};

struct ConvergenceTable {
  double limit = 0.0;
  double limit_error = 0.0;
  std::vector<ConvergenceRow> rows;
  // Deviations nonincreasing along the rows, in the order of n_list.
  bool monotone = false;
  double max_deviation = 0.0;
};

ConvergenceTable convergence_table(const Model& model, const LaplaceSpec& spec,
                                   const std::vector<double>& n_list, GridOptions options = {});

}  // namespace loopkit
