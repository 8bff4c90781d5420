#include "loopkit/quadrature.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cstdio>
#include <cmath>
#include <limits>
#include <string>

#include "loopkit/errors.hpp"

namespace loopkit::quad {
namespace {

using Rule = boost::math::quadrature::gauss_kronrod<double, 21>;

std::string format(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

// Error estimates below the normal range cannot be resolved; they count as converged.
void check_converged(const Result& r, double l1, double rel_tol, double abs_tol) {
  const double target = std::max({rel_tol * l1, abs_tol, std::numeric_limits<double>::min()});
  if (!std::isfinite(r.value) || !(r.error <= target)) {
    throw Error(ErrorCode::QuadratureFailure,
                "error estimate " + format(r.error) + " exceeds " + format(target));
  }
}

// Integral over [0, 1] of a function that may be singular at 0.
double endpoint_singular(const std::function<double(double)>& f, double rel_tol) {
  thread_local boost::math::quadrature::tanh_sinh<double> rule;
  double error = 0.0, l1 = 0.0, value = 0.0;
  try {
    value = rule.integrate(f, 0.0, 1.0, rel_tol, &error, &l1);
  } catch (const boost::math::evaluation_error& e) {
    throw Error(ErrorCode::QuadratureFailure, e.what());
  }
  // The level-to-level difference overstates the error of the finer level.
  check_converged({value, error}, l1, rel_tol * 10.0, 0.0);
  return value;
}

}  // namespace

Result integrate(const Integrand& f, double a, double b, double rel_tol, double abs_tol,
                 unsigned max_depth) {
  if (a == b) return {};
  Result r;
  double l1 = 0.0;
  r.value = Rule::integrate(f, a, b, max_depth, rel_tol, &r.error, &l1);
  check_converged(r, l1, rel_tol, abs_tol);
  return r;
}

Result integrate(const Integrand& f, std::vector<double> breakpoints, double rel_tol,
                 double abs_tol, unsigned max_depth) {
  std::sort(breakpoints.begin(), breakpoints.end());
  breakpoints.erase(std::unique(breakpoints.begin(), breakpoints.end()), breakpoints.end());
  Result total;
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    const Result piece = integrate(f, breakpoints[i], breakpoints[i + 1], rel_tol, abs_tol, max_depth);
    total.value += piece.value;
    total.error += piece.error;
  }
  return total;
}

Result box_cone_integral(const std::function<double(const Point&)>& f, const Point& apex_in, const Box& box,
                        double rel_tol) {
  const int d = box.dim;
  double extent = 0.0;
  for (int i = 0; i < d; ++i) extent = std::max(extent, box.hi[i] - box.lo[i]);
  // An apex within rounding of a face plane is moved onto it; otherwise the
  // cone on that face is flat with a spike at the apex projection.
  Point apex = apex_in;
  for (int i = 0; i < d; ++i) {
    if (std::abs(apex[i] - box.lo[i]) <= 1e-12 * extent) apex[i] = box.lo[i];
    if (std::abs(apex[i] - box.hi[i]) <= 1e-12 * extent) apex[i] = box.hi[i];
  }
  // Ray moment from the apex to a face point p: int_0^1 f(t (p - apex)) t^(d-1) dt.
  auto ray = [&](const Point& p) {
    auto integrand = [&](double t) {
      // Nodes pile up at t = 0; keep g(tL) t^(d-1) from forming inf * 0.
      t = std::max(t, 1e-100);
      Point y;
      for (int i = 0; i < d; ++i) {
        const auto k = static_cast<std::size_t>(i);
        y[k] = t * (p[k] - apex[k]);
      }
      return f(y) * std::pow(t, d - 1);
    };
    return endpoint_singular(integrand, rel_tol);
  };

  Result total;
  for (int axis = 0; axis < d; ++axis) {
    for (int side = 0; side < 2; ++side) {
      const double plane = side == 0 ? box.lo[axis] : box.hi[axis];
      // Signed height of the cone with base on this face.
      const double height = side == 0 ? apex[axis] - plane : plane - apex[axis];
      if (height == 0.0) continue;

      // Remaining coordinates parametrise the face.
      int free_axes[2] = {-1, -1};
      int nfree = 0;
      for (int i = 0; i < d; ++i) {
        if (i != axis) free_axes[nfree++] = i;
      }
      auto face_ray = [&](double u, double v) {
        Point p = apex;
        p[axis] = plane;
        if (nfree > 0) p[free_axes[0]] = u;
        if (nfree > 1) p[free_axes[1]] = v;
        return ray(p);
      };
      auto breaks_for = [&](int ax) {
        std::vector<double> b{box.lo[ax], box.hi[ax]};
        if (apex[ax] > box.lo[ax] && apex[ax] < box.hi[ax]) b.push_back(apex[ax]);
        return b;
      };

      double face = 0.0;
      if (nfree == 0) {
        face = face_ray(0.0, 0.0);
      } else if (nfree == 1) {
        auto f1 = [&](double u) { return face_ray(u, 0.0); };
        face = integrate(f1, breaks_for(free_axes[0]), rel_tol, 0.0).value;
      } else {
        auto outer = [&](double u) {
          auto inner = [&](double v) { return face_ray(u, v); };
          return integrate(inner, breaks_for(free_axes[1]), rel_tol, 0.0).value;
        };
        face = integrate(outer, breaks_for(free_axes[0]), rel_tol, 0.0).value;
      }
      total.value += height * face;
    }
  }
  total.error = rel_tol * std::abs(total.value);
  return total;
}

Result box_radial_integral(const std::function<double(double)>& g, const Point& apex,
                           const Box& box, double rel_tol) {
  return box_cone_integral([&](const Point& s) { return g(distance(s, Point{})); }, apex, box, rel_tol);
}

}  // namespace loopkit::quad
