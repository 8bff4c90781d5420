#pragma once

namespace loopkit {

/// Modified Bessel function of the second kind, order zero, for x > 0.
/// Power series below x = 2, Steed's continued fraction above; relative
/// error is at the level of a few ulps in both regimes.
double bessel_k0(double x);

/// Order-one companion of bessel_k0, evaluated with the same split.
double bessel_k1(double x);

}  // namespace loopkit
