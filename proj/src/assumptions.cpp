#include "loopkit/assumptions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "loopkit/errors.hpp"

namespace loopkit {
namespace {

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

}  // namespace

CheckReport check_resolvent(const FiniteChainModel& chain, double alpha, double beta,
                            const std::vector<IndexPair>& samples, double tol) {
  const Matrix ua = chain.kernel_matrix(alpha);
  const Matrix ub = chain.kernel_matrix(beta);
  double worst = 0.0;
  for (const auto& [x, y] : samples) {
    if (x >= chain.size() || y >= chain.size()) throw Error(ErrorCode::OutOfDomain, "sample out of range");
    double inner = 0.0;
    for (std::size_t w = 0; w < chain.size(); ++w) {
      inner += ua(idx(x), idx(w)) * ub(idx(w), idx(y)) * chain.m()[idx(w)];
    }
    const double res = ua(idx(x), idx(y)) - ub(idx(x), idx(y)) + (alpha - beta) * inner;
    worst = std::max(worst, std::abs(res));
  }
  return {"resolvent(alpha=" + format_double(alpha) + ",beta=" + format_double(beta) + ")", worst,
          tol, worst <= tol, "exact sum"};
}

quad::Result bm_inner_product(const KilledBrownianModel& bm, double alpha, double beta, double r,
                              double rel_tol) {
  if (!(r > 0.0)) throw Error(ErrorCode::OutOfDomain, "inner product needs distinct points");
  const double inf = kInfinity;
  switch (bm.dim()) {
    case 1: {
      auto f = [&](double w) { return bm.profile(alpha, std::abs(w)) * bm.profile(beta, std::abs(w - r)); };
      return quad::integrate(f, {-inf, 0.0, r, inf}, rel_tol);
    }
    case 2: {
      // Polar coordinates about x. For rho near r the inner integrand has a
      // log peak of width a = |rho - r| / sqrt(rho r) at theta = 0; for small
      // a, theta = a sinh(t) spreads it out. At rho = r exactly, theta = pi v^2
      // softens the log singularity instead.
      double inner_rel = 0.0, inner_abs = 0.0;
      auto angular = [&](double rho) {
        auto at = [&](double theta) {
          const double half = std::sin(0.5 * theta);
          return bm.profile(beta, std::sqrt((rho - r) * (rho - r) + 4.0 * rho * r * half * half));
        };
        const double width = std::abs(rho - r) / std::sqrt(rho * r);
        if (width == 0.0) {
          auto g = [&](double v) { return at(std::numbers::pi * v * v) * 2.0 * std::numbers::pi * v; };
          return 2.0 * quad::integrate(g, 0.0, 1.0, inner_rel, inner_abs).value;
        }
        if (width >= 1.0) return 2.0 * quad::integrate(at, 0.0, std::numbers::pi, inner_rel, inner_abs).value;
        auto g = [&](double t) { return at(width * std::sinh(t)) * width * std::cosh(t); };
        return 2.0 * quad::integrate(g, 0.0, std::asinh(std::numbers::pi / width), inner_rel, inner_abs).value;
      };
      auto f = [&](double rho) { return rho * bm.profile(alpha, rho) * angular(rho); };
      // Square-root substitutions at both log singularities: rho log rho at
      // 0 and angular(rho) ~ log|rho - r| on either side of r.
      const double h = 0.5 * r;
      auto origin = [&](double t) { return f(h * t * t) * 2.0 * h * t; };
      auto below = [&](double s) { return f(r - h * s * s) * 2.0 * h * s; };
      auto above = [&](double s) { return f(r + s * s) * 2.0 * s; };
      auto sum = [&](double rel, double abs) {
        quad::Result total;
        for (const auto& piece : {quad::integrate(origin, 0.0, 1.0, rel, abs), quad::integrate(below, 0.0, 1.0, rel, abs),
                                  quad::integrate(above, 0.0, 1.0, rel, abs), quad::integrate(f, r + 1.0, inf, rel, abs)}) {
          total.value += piece.value;
          total.error += piece.error;
        }
        return total;
      };
      // The tolerance applies to the sum, at the scale of the closed form
      // (which sets tolerances only). Inner errors enter the sum with weight
      // rho u^alpha(rho), whose integral is 1 / (2 pi (alpha + kappa)); an
      // absolute inner target keeps their share below rel_tol / 10 where g
      // is small.
      const double scale = std::abs(bm.joined_profile(alpha, beta, r));
      inner_rel = std::max(1e-2 * rel_tol, 1e-11);
      inner_abs = 0.1 * rel_tol * scale * std::numbers::pi * (alpha + bm.kappa());
      return sum(rel_tol, 0.25 * rel_tol * scale);
    }
    default: {
      // Bipolar reduction: the shell of radius rho about x meets spheres of
      // radius s about y for s in [|rho - r|, rho + r], with weight
      // 2 pi rho s / r. s u^beta(s) is elementary, so the inner integral is too.
      const double lb = bm.lambda(beta);
      auto shell = [&](double rho) {
        return (std::exp(-lb * std::abs(rho - r)) - std::exp(-lb * (rho + r))) /
               (2.0 * std::numbers::pi * lb);
      };
      auto f = [&](double rho) {
        return 2.0 * std::numbers::pi / r * rho * bm.profile(alpha, rho) * shell(rho);
      };
      return quad::integrate(f, {0.0, r, inf}, rel_tol);
    }
  }
}

CheckReport check_resolvent(const KilledBrownianModel& bm, double alpha, double beta,
                            const std::vector<PointPair>& samples, double tol) {
  double worst = 0.0;
  double quad_err = 0.0;
  for (const auto& [x, y] : samples) {
    const double r = distance(x, y);
    if (!(r > 0.0)) throw Error(ErrorCode::OutOfDomain, "resolvent samples need x != y");
    double res = 0.0;
    if (alpha != beta) {
      const quad::Result inner = bm_inner_product(bm, alpha, beta, r);
      quad_err = std::max(quad_err, std::abs(alpha - beta) * inner.error);
      res = bm.profile(alpha, r) - bm.profile(beta, r) + (alpha - beta) * inner.value;
    }
    worst = std::max(worst, std::abs(res));
  }
  return {"resolvent(alpha=" + format_double(alpha) + ",beta=" + format_double(beta) + ")", worst,
          tol, worst <= tol, "quadrature error estimate " + format_double(quad_err)};
}

FiniteVerdict check_fin1(const FiniteChainModel& chain, const std::vector<std::size_t>& compact) {
  const Matrix& u = chain.green();
  double sup = 0.0;
  for (std::size_t x = 0; x < chain.size(); ++x) {
    double s = 0.0;
    for (std::size_t y : compact) {
      if (y >= chain.size()) throw Error(ErrorCode::OutOfDomain, "compact set index out of range");
      const double v = u(idx(x), idx(y)) + u(idx(y), idx(x));
      s += v * v * chain.m()[idx(y)];
    }
    sup = std::max(sup, s);
  }
  return {sup, std::isfinite(sup), "exact sum over states"};
}

namespace {

// Near-diagonal classification: int_0 (r^-p)^2 r^(d-1) dr < inf iff 2p < d.
bool square_locally_integrable(double order, int dim) { return 2.0 * order < dim; }

FiniteVerdict radial_fin1(const std::function<double(double)>& u, double order, int dim,
                          const Box& compact) {
  if (!square_locally_integrable(order, dim)) {
    return {kInfinity, false,
            "kernel ~ r^-" + format_double(order) + " has non-integrable square in dimension " +
                std::to_string(dim)};
  }
  if (dim > 3) {
    return {std::nan(""), true, "square locally integrable; numeric value needs dim <= 3"};
  }
  // The integrand 4 u(|x - y|)^2 is radially decreasing, so sampling corners,
  // edge midpoints and the centre of K brackets the supremum.
  auto g = [&](double r) {
    const double v = u(r);
    return 4.0 * v * v;
  };
  double sup = 0.0;
  const int per_axis = 3;
  int total = 1;
  for (int i = 0; i < dim; ++i) total *= per_axis;
  for (int n = 0; n < total; ++n) {
    Point x;
    int rest = n;
    for (int i = 0; i < dim; ++i) {
      const int k = rest % per_axis;
      rest /= per_axis;
      x[static_cast<std::size_t>(i)] =
          compact.lo[static_cast<std::size_t>(i)] +
          0.5 * k * (compact.hi[static_cast<std::size_t>(i)] - compact.lo[static_cast<std::size_t>(i)]);
    }
    sup = std::max(sup, quad::box_radial_integral(g, x, compact, 1e-8).value);
  }
  return {sup, true, "square locally integrable; sampled supremum"};
}

double fin2_gap(const Box& compact, const Box& neighbourhood) {
  if (compact.dim != neighbourhood.dim) throw Error(ErrorCode::InvalidArgument, "box dimensions differ");
  double gap = kInfinity;
  for (int i = 0; i < compact.dim; ++i) {
    const auto k = static_cast<std::size_t>(i);
    gap = std::min({gap, compact.lo[k] - neighbourhood.lo[k], neighbourhood.hi[k] - compact.hi[k]});
  }
  if (!(gap > 0.0)) throw Error(ErrorCode::InvalidArgument, "K must lie in the interior of its neighbourhood");
  return gap;
}

}  // namespace

FiniteVerdict check_fin1(const KilledBrownianModel& bm, const Box& compact) {
  if (compact.dim != bm.dim()) throw Error(ErrorCode::InvalidArgument, "box dimension mismatch");
  return radial_fin1([&](double r) { return bm.profile(0.0, r); }, bm.singularity_order(), bm.dim(),
                     compact);
}

FiniteVerdict check_fin1(const PowerLawProfile& kernel, const Box& compact) {
  return radial_fin1([&](double r) { return kernel.value(r); }, kernel.exponent, kernel.dim, compact);
}

FiniteVerdict check_fin2(const FiniteChainModel& chain, double alpha,
                         const std::vector<std::size_t>& compact,
                         const std::vector<std::size_t>& neighbourhood) {
  const Matrix u = chain.kernel_matrix(alpha);
  double sup = 0.0;
  for (std::size_t z = 0; z < chain.size(); ++z) {
    if (std::find(neighbourhood.begin(), neighbourhood.end(), z) != neighbourhood.end()) continue;
    for (std::size_t x : compact) {
      if (std::find(neighbourhood.begin(), neighbourhood.end(), x) == neighbourhood.end()) {
        throw Error(ErrorCode::InvalidArgument, "K must be contained in its neighbourhood");
      }
      sup = std::max(sup, u(idx(z), idx(x)));
    }
  }
  return {sup, std::isfinite(sup), "finite maximum"};
}

FiniteVerdict check_fin2(const KilledBrownianModel& bm, double alpha, const Box& compact,
                         const Box& neighbourhood) {
  const double gap = fin2_gap(compact, neighbourhood);
  // Radially decreasing kernel: the sup sits at the minimal separation.
  const double v = bm.profile(alpha, gap);
  return {v, std::isfinite(v), "attained at separation " + format_double(gap)};
}

FiniteVerdict check_04(const FiniteChainModel& chain, double delta,
                       const std::vector<std::size_t>& compact) {
  if (!(delta > 0.0)) throw Error(ErrorCode::InvalidArgument, "delta must be positive");
  const Matrix p = chain.transition(delta);
  const Matrix& u = chain.green();
  double total = 0.0;
  for (std::size_t z : compact) {
    if (z >= chain.size()) throw Error(ErrorCode::OutOfDomain, "compact set index out of range");
    total += chain.m()[idx(z)] * p.row(idx(z)).dot(u.col(idx(z)));
  }
  return {total, std::isfinite(total), "matrix exponential"};
}

FiniteVerdict check_04(const KilledBrownianModel& bm, double delta, const Box& compact) {
  if (!(delta > 0.0)) throw Error(ErrorCode::InvalidArgument, "delta must be positive");
  if (compact.dim != bm.dim()) throw Error(ErrorCode::InvalidArgument, "box dimension mismatch");
  const double d = bm.dim();
  auto diag_density = [&](double t) {
    return std::pow(2.0 * std::numbers::pi * t, -0.5 * d) * std::exp(-bm.kappa() * t);
  };
  const quad::Result tail = quad::integrate(diag_density, delta, kInfinity, 1e-12, 1e-300);
  const double v = compact.volume() * tail.value;
  return {v, std::isfinite(v), "on-diagonal transition density integrated from delta"};
}

CheckReport check_generator_identity(const FiniteChainModel& chain, double alpha, double tol) {
  const auto n = static_cast<Eigen::Index>(chain.size());
  const Matrix lhs = (alpha * Matrix::Identity(n, n) - chain.generator()) * chain.kernel_matrix(alpha) *
                     chain.m().asDiagonal();
  const double err = (lhs - Matrix::Identity(n, n)).cwiseAbs().maxCoeff();
  return {"generator_identity(alpha=" + format_double(alpha) + ")", err, tol, err <= tol, ""};
}

CheckReport check_excessive_kernel(const FiniteChainModel& chain, const std::vector<double>& times,
                                   double tol) {
  const Matrix& u = chain.green();
  double worst = 0.0;
  for (double t : times) {
    const Matrix pu = chain.transition(t) * u;
    worst = std::max(worst, (pu - u).maxCoeff());
  }
  return {"excessive_kernel", worst, tol, worst <= tol, "max of P_t u(.,z) - u(.,z)"};
}

CheckReport check_excessive_measure(const FiniteChainModel& chain, const std::vector<double>& times,
                                    double tol) {
  double worst = 0.0;
  for (double t : times) {
    const Vector mp = chain.transition(t).transpose() * chain.m();
    worst = std::max(worst, (mp - chain.m()).maxCoeff());
  }
  return {"excessive_measure", worst, tol, worst <= tol, "max of (m P_t - m)"};
}

CheckReport check_alpha_monotone(const FiniteChainModel& chain, const std::vector<double>& alphas) {
  std::vector<double> grid = alphas;
  std::sort(grid.begin(), grid.end());
  double worst = 0.0;
  Matrix prev = chain.kernel_matrix(grid.front());
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const Matrix cur = chain.kernel_matrix(grid[i]);
    for (Eigen::Index x = 0; x < cur.rows(); ++x) {
      for (Eigen::Index y = 0; y < cur.cols(); ++y) {
        if (x != y) worst = std::max(worst, cur(x, y) - prev(x, y));
      }
    }
    prev = cur;
  }
  return {"alpha_monotone", worst, 1e-14, worst <= 1e-14, "max increase along alpha grid"};
}

CheckReport check_off_diagonal_positive(const FiniteChainModel& chain) {
  const Matrix& u = chain.green();
  double smallest = kInfinity;
  for (Eigen::Index x = 0; x < u.rows(); ++x) {
    for (Eigen::Index y = 0; y < u.cols(); ++y) {
      if (x != y) smallest = std::min(smallest, u(x, y));
    }
  }
  if (u.rows() == 1) smallest = u(0, 0);
  return {"off_diagonal_positive", smallest, 0.0, smallest > 0.0, "min_{x!=y} u(x,y)"};
}

CheckReport check_vanishing(const FiniteChainModel& chain, double eps) {
  const double alpha = chain.vanishing_threshold(eps);
  const double largest = chain.kernel_matrix(alpha).maxCoeff();
  return {"vanishing_limit", largest, eps, largest < eps,
          "max u^alpha at alpha=" + format_double(alpha)};
}

}  // namespace loopkit
