#pragma once

#include <string>
#include <vector>

#include "loopkit/kernel_grid.hpp"
#include "loopkit/model.hpp"
#include "loopkit/permutations.hpp"

namespace loopkit {

// Revuz measure of a continuous additive functional on a finite chain, kept
// as atom weights. On a finite space every such measure is g * m with
// g = atoms / m, and the functional is A_t = int_0^t g(X_s) ds.
struct RevuzMeasure {
  std::string name;
  Vector atoms;

  static RevuzMeasure from_atoms(Vector atoms, std::string name = {});
  static RevuzMeasure from_density(const FiniteChainModel& chain, const Vector& g, std::string name = {});

  // g with dA_t = g(X_t) dt.
  Vector density(const FiniteChainModel& chain) const;
};

/// x -> sum_y u(x, y) f(y) nu(y), the potential of f dA.
Vector caf_potential(const FiniteChainModel& chain, const RevuzMeasure& nu, const Vector& f);

/// int u(x, y) f(y) g(y) dy for the killed Brownian motion and nu = g * m, by
/// cone quadrature about x over the support of g.
double caf_potential(const KilledBrownianModel& bm, const TestFunction& g, const TestFunction& f, const Point& x,
                     double rel_tol = 1e-9);

/// Loop-measure moment of multiple CAFs: the sum over the regime of
/// int u(x_1, x_2) ... u(x_k, x_1) prod nu_{pi_j}(dx_j). InfiniteMoment for k = 1.
double caf_mu_moment(const FiniteChainModel& chain, const std::vector<RevuzMeasure>& measures,
                     Regime regime = Regime::cyclic_classes);

/// E^x int_{t_1 < ... < t_k} dA^1_{t_1} ... dA^k_{t_k}
///   = int u(x, x_1) u(x_1, x_2) ... u(x_{k-1}, x_k) prod nu_j(dx_j).
double ordered_caf_expectation(const FiniteChainModel& chain, std::size_t x, const std::vector<RevuzMeasure>& measures);

/// Q^{z,z} of the ordered multiple CAF:
/// int u(z, x_1) ... u(x_{k-1}, x_k) u(x_k, z) prod nu_j(dx_j).
double rooted_caf_moment(const FiniteChainModel& chain, std::size_t z, const std::vector<RevuzMeasure>& measures);

/// y -> sum_x u(x, y) f(x) m(x), the potential kernel of the dual.
Vector dual_potential(const FiniteChainModel& chain, const Vector& f);

/// | <f, U g>_m - <Uhat f, g>_m |
double duality_residual(const FiniteChainModel& chain, const Vector& f, const Vector& g);

/// | <f, U_A g>_m - sum_y Uhat f(y) g(y) nu(y) |
double revuz_residual(const FiniteChainModel& chain, const RevuzMeasure& nu, const Vector& f, const Vector& g);

/// Revuz measure of A under the h-transform by h_z = u(., z): atoms u(y, z) nu(y).
RevuzMeasure htransform_revuz(const FiniteChainModel& chain, std::size_t z, const RevuzMeasure& nu);

/// Same with an arbitrary positive h (h = 1 leaves nu unchanged).
RevuzMeasure htransform_revuz(const Vector& h, const RevuzMeasure& nu);

/// E^{x / h_z} int f dA = (1 / h_z(x)) sum_y u(x, y) f(y) h_z(y) nu(y).
Vector htransform_caf_potential(const FiniteChainModel& chain, std::size_t z, const RevuzMeasure& nu, const Vector& f);

}  // namespace loopkit
