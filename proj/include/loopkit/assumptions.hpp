#pragma once

#include <string>
#include <utility>
#include <vector>

#include "loopkit/model.hpp"
#include "loopkit/quadrature.hpp"

namespace loopkit {

// One row of a diagnostic suite. `value` is the quantity measured (a
// residual or an integral) and `pass` compares it with `tolerance` unless
// the check is a finiteness verdict, in which case tolerance is unused.
struct CheckReport {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string detail;
};

using IndexPair = std::pair<std::size_t, std::size_t>;
using PointPair = std::pair<Point, Point>;

// --- resolvent equation -----------------------------------------------------

CheckReport check_resolvent(const FiniteChainModel& chain, double alpha, double beta,
                            const std::vector<IndexPair>& samples, double tol);
CheckReport check_resolvent(const KilledBrownianModel& bm, double alpha, double beta,
                            const std::vector<PointPair>& samples, double tol);

/// int u^alpha(x, w) u^beta(w, y) dw over R^d for |x - y| = r > 0, by
/// adaptive quadrature in coordinates centred on x.
quad::Result bm_inner_product(const KilledBrownianModel& bm, double alpha, double beta, double r,
                              double rel_tol = 1e-10);

// --- integrability conditions -----------------------------------------------

struct FiniteVerdict {
  double value = 0.0;  // +inf when classified divergent
  bool finite = false;
  std::string detail;
};

// sup_x int_K (u(x,y) + u(y,x))^2 m(dy)
FiniteVerdict check_fin1(const FiniteChainModel& chain, const std::vector<std::size_t>& compact);
FiniteVerdict check_fin1(const KilledBrownianModel& bm, const Box& compact);
FiniteVerdict check_fin1(const PowerLawProfile& kernel, const Box& compact);

// sup over z outside the neighbourhood, x in K, of u^alpha(z, x)
FiniteVerdict check_fin2(const FiniteChainModel& chain, double alpha,
                         const std::vector<std::size_t>& compact,
                         const std::vector<std::size_t>& neighbourhood);
FiniteVerdict check_fin2(const KilledBrownianModel& bm, double alpha, const Box& compact,
                         const Box& neighbourhood);

// int_K P_delta(z, dx) u(x, z) m(dz)
FiniteVerdict check_04(const FiniteChainModel& chain, double delta,
                       const std::vector<std::size_t>& compact);
FiniteVerdict check_04(const KilledBrownianModel& bm, double delta, const Box& compact);

// --- finite-chain identities ------------------------------------------------

// max |(alpha I - G) U^alpha diag(m) - I|
CheckReport check_generator_identity(const FiniteChainModel& chain, double alpha, double tol);
// P_t u(., z) <= u(., z) for every z and every sampled t
CheckReport check_excessive_kernel(const FiniteChainModel& chain, const std::vector<double>& times,
                                   double tol);
// m P_t <= m for every sampled t
CheckReport check_excessive_measure(const FiniteChainModel& chain, const std::vector<double>& times,
                                    double tol);
// u^alpha(x, y) nonincreasing along the alpha grid, for all x != y
CheckReport check_alpha_monotone(const FiniteChainModel& chain, const std::vector<double>& alphas);
CheckReport check_off_diagonal_positive(const FiniteChainModel& chain);
CheckReport check_vanishing(const FiniteChainModel& chain, double eps);

}  // namespace loopkit
