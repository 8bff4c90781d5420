#include <boost/math/quadrature/exp_sinh.hpp>
#include <cmath>

#include "doctest.h"
#include "loopkit/errors.hpp"
#include "loopkit/special_functions.hpp"

using loopkit::bessel_k0;
using loopkit::bessel_k1;

namespace {

// K_n(x) = int_0^inf exp(-x cosh t) cosh(n t) dt
double k_integral(double x, int n) {
  boost::math::quadrature::exp_sinh<double> integrator;
  auto f = [&](double t) {
    const double c = x * std::cosh(t);
    return 0.5 * (std::exp(n * t - c) + std::exp(-n * t - c));
  };
  return integrator.integrate(f, 0.0, std::numeric_limits<double>::infinity(), 1e-15);
}

}  // namespace

TEST_CASE("K0 and K1 match the integral representation on both sides of the split") {
  for (double x : {1e-3, 0.1, 0.5, 1.0, 1.9, 2.0, 2.1, 3.0, 7.5, 20.0, 45.0}) {
    CAPTURE(x);
    CHECK(bessel_k0(x) == doctest::Approx(k_integral(x, 0)).epsilon(1e-12));
    CHECK(bessel_k1(x) == doctest::Approx(k_integral(x, 1)).epsilon(1e-12));
  }
}

TEST_CASE("K0 relative error against the standard library across a log grid") {
  double worst = 0.0;
  for (double x = 1e-8; x < 200.0; x *= 1.07) {
    worst = std::max(worst, std::abs(bessel_k0(x) / std::cyl_bessel_k(0.0, x) - 1.0));
    worst = std::max(worst, std::abs(bessel_k1(x) / std::cyl_bessel_k(1.0, x) - 1.0));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("K0 edge values") {
  CHECK(std::isinf(bessel_k0(0.0)));
  CHECK(bessel_k0(std::numeric_limits<double>::infinity()) == 0.0);
  CHECK_THROWS_AS(bessel_k0(-1.0), loopkit::Error);
  // Continuity across the split point.
  CHECK(bessel_k0(std::nextafter(2.0, 3.0)) == doctest::Approx(bessel_k0(2.0)).epsilon(1e-14));
}
