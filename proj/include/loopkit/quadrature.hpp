#pragma once

#include <functional>
#include <vector>

#include "loopkit/geometry.hpp"

namespace loopkit::quad {

struct Result {
  double value = 0.0;
  double error = 0.0;
};

using Integrand = std::function<double(double)>;

/// Adaptive Gauss-Kronrod on [a, b]; either end may be infinite. Throws
/// QuadratureFailure when the error estimate stays above
/// max(rel_tol * L1, abs_tol).
Result integrate(const Integrand& f, double a, double b, double rel_tol = 1e-10,
                 double abs_tol = 0.0, unsigned max_depth = 24);

/// Same, splitting at interior breakpoints (sorted, duplicates ignored).
Result integrate(const Integrand& f, std::vector<double> breakpoints, double rel_tol = 1e-10,
                 double abs_tol = 0.0, unsigned max_depth = 24);

/// Integral over `box` of f(y - apex) dy by the cone decomposition about
/// `apex`. f receives the displacement from the apex, so it may be singular
/// at zero: each ray is integrated with weight t^(d-1). Keep the apex in the
/// closed box when f is only defined there.
Result box_cone_integral(const std::function<double(const Point&)>& f, const Point& apex, const Box& box,
                         double rel_tol = 1e-9);

/// Integral over `box` of g(|y - apex|) dy, using the cone decomposition of
/// the box about the apex. The apex may sit anywhere, including inside the
/// box where g is singular: the radial factor t^(d-1) absorbs singularities
/// weaker than |y - apex|^-d.
Result box_radial_integral(const std::function<double(double)>& g, const Point& apex,
                           const Box& box, double rel_tol = 1e-9);

}  // namespace loopkit::quad
