#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "loopkit/kernel_grid.hpp"
#include "loopkit/model.hpp"
#include "loopkit/permutations.hpp"

namespace loopkit {

struct MomentValue {
  double value = 0.0;
  // Zero on finite chains; on euclidean models the change against a grid
  // of half the resolution.
  double error_estimate = 0.0;
};

// Grid-level integrand: node masses f_j * m in, moment value out.
using GridFn = std::function<double(const KernelGrid&, const std::vector<Vector>&)>;

/// Runs fn on the model's grid. Euclidean models are evaluated on three
/// nested grids (N/4, N/2, N); the observed contraction ratio drives a
/// Richardson step, and the error estimate is the larger of that step and
/// the change between the two finest grids.
MomentValue evaluate_on_grids(const Model& model, const std::vector<TestFunction>& functions,
                              GridOptions options, const GridFn& fn);

// --- kernel-chain algebra ---------------------------------------------------

/// tr( diag(mass_1) K_1 diag(mass_2) K_2 ... diag(mass_k) K_k )
double cycle_trace(const std::vector<Vector>& masses, const std::vector<const Matrix*>& links);

/// row^T diag(mass_1) K_1 diag(mass_2) ... K_{k-1} diag(mass_k) col, with
/// links.size() == masses.size() - 1.
double rooted_chain(const Vector& row, const std::vector<Vector>& masses,
                    const std::vector<const Matrix*>& links, const Vector& col);

// --- moment formulas ----------------------------------------------------------

/// Loop-measure moment of prod_j int f_j(X_t) dt, summed over the regime:
/// cyclic classes give the product of occupation times, translations give the
/// single ordered cyclic integral (the moment of the cyclically symmetrised
/// multiple integral), full sums every ordering. InfiniteMoment for k = 1.
MomentValue mu_moment(const Model& model, const std::vector<TestFunction>& functions,
                      Regime regime = Regime::cyclic_classes, GridOptions options = {});

/// int u(x1,x2) ... u(xk,x1) prod f_j(x_j) m(dx_j), no permutation sum.
MomentValue ordered_mu_moment(const Model& model, const std::vector<TestFunction>& functions,
                              GridOptions options = {});

/// Companion-measure moment of prod_j int f_j(X_t) dt e^{-alpha zeta}: full
/// permutation sum with the root integrated out against m. alpha > 0.
MomentValue nu_moment(const Model& model, const std::vector<TestFunction>& functions, double alpha,
                      GridOptions options = {});

/// Moment under the loop law rooted at `root`: ordered is the time-ordered
/// chain integral, unordered the full permutation sum. alpha >= 0 adds the
/// e^{-alpha zeta} discount.
MomentValue qzz_moment(const Model& model, const State& root, const std::vector<TestFunction>& functions,
                       double alpha, bool ordered, GridOptions options = {});

/// | int u^a(x,z) u^a(z,y) m(dz) + (u^{a+h}(x,y) - u^{a-h}(x,y)) / 2h |
double derivative_identity_residual(const Model& model, double alpha, const State& x, const State& y,
                                    double h_step);

// Grid-level forms, shared with the subordination and Revuz modules.
double grid_ordered_cycle(const KernelGrid& grid, const std::vector<Vector>& masses, double alpha);
double grid_nu_term(const KernelGrid& grid, const std::vector<Vector>& masses, double alpha);

}  // namespace loopkit
