#include "loopkit/special_functions.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "loopkit/errors.hpp"

namespace loopkit {
namespace {

constexpr double kSplit = 2.0;
constexpr double kEps = 1e-17;
constexpr int kMaxTerms = 10000;

struct KPair {
  double k0;
  double k1;
};

// Ascending series in (x/2)^2 with harmonic-number coefficients.
KPair series(double x) {
  const double y = 0.25 * x * x;
  const double log_term = std::log(0.5 * x) + std::numbers::egamma;

  // I0, I1 and the digamma-weighted sums, accumulated term by term.
  double i0 = 0.0, i1 = 0.0, s0 = 0.0, s1 = 0.0;
  double t0 = 1.0;  // y^k / (k!)^2
  double t1 = 1.0;  // y^k / (k! (k+1)!)
  double harmonic = 0.0;
  for (int k = 0; k < kMaxTerms; ++k) {
    if (k > 0) {
      t0 *= y / (static_cast<double>(k) * k);
      t1 *= y / (static_cast<double>(k) * (k + 1));
      harmonic += 1.0 / k;
    }
    i0 += t0;
    i1 += t1;
    s0 += t0 * harmonic;
    // psi(k+1) + psi(k+2) = 2 H_k + 1/(k+1) - 2 gamma
    s1 += t1 * (2.0 * harmonic + 1.0 / (k + 1) - 2.0 * std::numbers::egamma);
    if (t0 < kEps * std::abs(i0) && t1 < kEps * std::abs(i1)) break;
  }
  i1 *= 0.5 * x;
  KPair out{};
  out.k0 = -log_term * i0 + s0;
  out.k1 = 1.0 / x + std::log(0.5 * x) * i1 - 0.25 * x * s1;
  return out;
}

// Steed's algorithm for the second continued fraction (order 0).
KPair continued_fraction(double x) {
  const double a1 = 0.25;
  double b = 2.0 * (1.0 + x);
  double d = 1.0 / b;
  double h = d, delh = d;
  double q1 = 0.0, q2 = 1.0;
  double q = a1, c = a1, a = -a1;
  double s = 1.0 + q * delh;
  int i = 1;
  for (; i < kMaxTerms; ++i) {
    a -= 2 * i;
    c = -a * c / (i + 1.0);
    const double qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0;
    d = 1.0 / (b + a * d);
    delh = (b * d - 1.0) * delh;
    h += delh;
    const double dels = q * delh;
    s += dels;
    if (std::abs(dels / s) < kEps) break;
  }
  if (i == kMaxTerms) {
    throw Error(ErrorCode::QuadratureFailure, "bessel continued fraction did not converge");
  }
  h *= a1;
  KPair out{};
  out.k0 = std::sqrt(std::numbers::pi / (2.0 * x)) * std::exp(-x) / s;
  out.k1 = out.k0 * (x + 0.5 - h) / x;
  return out;
}

KPair evaluate(double x) {
  if (std::isnan(x) || x < 0.0) {
    throw Error(ErrorCode::OutOfDomain, "bessel K requires x >= 0");
  }
  if (x == 0.0) {
    const double inf = std::numeric_limits<double>::infinity();
    return {inf, inf};
  }
  if (std::isinf(x)) return {0.0, 0.0};
  return x <= kSplit ? series(x) : continued_fraction(x);
}

}  // namespace

double bessel_k0(double x) { return evaluate(x).k0; }
double bessel_k1(double x) { return evaluate(x).k1; }

}  // namespace loopkit
