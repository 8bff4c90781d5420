#include "loopkit/revuz.hpp"

#include <algorithm>
#include <cmath>

#include "loopkit/errors.hpp"
#include "loopkit/moments.hpp"
#include "loopkit/quadrature.hpp"

namespace loopkit {
namespace {

void require_size(const FiniteChainModel& chain, const Vector& v, const char* what) {
  if (static_cast<std::size_t>(v.size()) != chain.size()) {
    throw Error(ErrorCode::InvalidArgument, std::string(what) + " has the wrong number of states");
  }
}

void require_measure(const FiniteChainModel& chain, const RevuzMeasure& nu) {
  require_size(chain, nu.atoms, "Revuz measure");
  if ((nu.atoms.array() < 0.0).any() || !nu.atoms.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "Revuz measure weights must be finite and >= 0");
  }
}

void require_state(const FiniteChainModel& chain, std::size_t x) {
  if (x >= chain.size()) throw Error(ErrorCode::OutOfDomain, "state index out of range");
}

// u diag(nu_1) u diag(nu_2) ... u diag(nu_k) 1
Vector open_chain(const FiniteChainModel& chain, const std::vector<RevuzMeasure>& measures, const Vector& tail) {
  Vector v = tail;
  for (std::size_t j = measures.size(); j-- > 0;) v = chain.green() * measures[j].atoms.cwiseProduct(v);
  return v;
}

}  // namespace

RevuzMeasure RevuzMeasure::from_atoms(Vector atoms, std::string name) {
  return RevuzMeasure{std::move(name), std::move(atoms)};
}

RevuzMeasure RevuzMeasure::from_density(const FiniteChainModel& chain, const Vector& g, std::string name) {
  require_size(chain, g, "density");
  return RevuzMeasure{std::move(name), g.cwiseProduct(chain.m())};
}

Vector RevuzMeasure::density(const FiniteChainModel& chain) const {
  require_size(chain, atoms, "Revuz measure");
  return atoms.cwiseQuotient(chain.m());
}

Vector caf_potential(const FiniteChainModel& chain, const RevuzMeasure& nu, const Vector& f) {
  require_measure(chain, nu);
  require_size(chain, f, "f");
  return chain.green() * f.cwiseProduct(nu.atoms);
}

double caf_potential(const KilledBrownianModel& bm, const TestFunction& g, const TestFunction& f, const Point& x,
                     double rel_tol) {
  if (g.support().dim != bm.dim()) throw Error(ErrorCode::InvalidArgument, "density dimension mismatch");
  if (g.is_zero() || f.is_zero()) return 0.0;
  // Cones are built about the nearest point of the support so that every ray
  // stays inside it; the kernel is smooth there unless x itself is inside.
  const Box& box = g.support();
  Point apex = x;
  for (std::size_t i = 0; i < static_cast<std::size_t>(bm.dim()); ++i) apex[i] = std::clamp(x[i], box.lo[i], box.hi[i]);
  const auto integrand = [&](const Point& d) {
    Point y = apex;
    for (std::size_t i = 0; i < static_cast<std::size_t>(bm.dim()); ++i) y[i] += d[i];
    return bm.potential(0.0, x, y) * f(y) * g(y);
  };
  return quad::box_cone_integral(integrand, apex, box, rel_tol).value;
}

double caf_mu_moment(const FiniteChainModel& chain, const std::vector<RevuzMeasure>& measures, Regime regime) {
  if (measures.empty()) throw Error(ErrorCode::InvalidArgument, "need at least one Revuz measure");
  if (static_cast<int>(measures.size()) > kMaxPermutationOrder) {
    throw Error(ErrorCode::TooManyPermutations, "at most 8 measures are supported");
  }
  for (const auto& nu : measures) require_measure(chain, nu);
  if (measures.size() == 1) {
    throw Error(ErrorCode::InfiniteMoment, "k = 1 loop-measure moment of a CAF is infinite");
  }
  const std::vector<const Matrix*> links(measures.size(), &chain.green());
  std::vector<double> terms;
  for (const auto& perm : enumerate_regime(regime, static_cast<int>(measures.size()))) {
    std::vector<Vector> masses;
    for (int p : perm) masses.push_back(measures[static_cast<std::size_t>(p)].atoms);
    terms.push_back(cycle_trace(masses, links));
    if (regime == Regime::cyclic_translations) break;
  }
  return pairwise_sum(terms);
}

double ordered_caf_expectation(const FiniteChainModel& chain, std::size_t x, const std::vector<RevuzMeasure>& measures) {
  require_state(chain, x);
  for (const auto& nu : measures) require_measure(chain, nu);
  const Vector ones = Vector::Ones(static_cast<Eigen::Index>(chain.size()));
  return open_chain(chain, measures, ones)[static_cast<Eigen::Index>(x)];
}

double rooted_caf_moment(const FiniteChainModel& chain, std::size_t z, const std::vector<RevuzMeasure>& measures) {
  require_state(chain, z);
  for (const auto& nu : measures) require_measure(chain, nu);
  const auto zi = static_cast<Eigen::Index>(z);
  return open_chain(chain, measures, chain.green().col(zi))[zi];
}

Vector dual_potential(const FiniteChainModel& chain, const Vector& f) {
  require_size(chain, f, "f");
  return chain.green().transpose() * f.cwiseProduct(chain.m());
}

double duality_residual(const FiniteChainModel& chain, const Vector& f, const Vector& g) {
  const Vector& m = chain.m();
  const double lhs = f.cwiseProduct(m).dot(chain.green() * g.cwiseProduct(m));
  const double rhs = dual_potential(chain, f).cwiseProduct(m).dot(g);
  return std::abs(lhs - rhs);
}

double revuz_residual(const FiniteChainModel& chain, const RevuzMeasure& nu, const Vector& f, const Vector& g) {
  const double lhs = f.cwiseProduct(chain.m()).dot(caf_potential(chain, nu, g));
  const double rhs = dual_potential(chain, f).cwiseProduct(g).dot(nu.atoms);
  return std::abs(lhs - rhs);
}

RevuzMeasure htransform_revuz(const FiniteChainModel& chain, std::size_t z, const RevuzMeasure& nu) {
  require_state(chain, z);
  require_measure(chain, nu);
  const auto zi = static_cast<Eigen::Index>(z);
  if (!std::isfinite(chain.green()(zi, zi))) throw Error(ErrorCode::NonFiniteDiagonal, "u(z, z) is not finite");
  return htransform_revuz(Vector(chain.green().col(zi)), nu);
}

RevuzMeasure htransform_revuz(const Vector& h, const RevuzMeasure& nu) {
  if (h.size() != nu.atoms.size()) throw Error(ErrorCode::InvalidArgument, "h has the wrong number of states");
  return RevuzMeasure{nu.name, h.cwiseProduct(nu.atoms)};
}

Vector htransform_caf_potential(const FiniteChainModel& chain, std::size_t z, const RevuzMeasure& nu, const Vector& f) {
  const RevuzMeasure scaled = htransform_revuz(chain, z, nu);
  const Vector h = chain.green().col(static_cast<Eigen::Index>(z));
  return caf_potential(chain, scaled, f).cwiseQuotient(h);
}

}  // namespace loopkit
