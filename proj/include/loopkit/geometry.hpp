#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace loopkit {

// Coordinates beyond the ambient dimension stay zero. Process models live in
// d <= 3; the extra slot lets diagnostic kernel profiles be stated in d = 4.
inline constexpr std::size_t kMaxDim = 4;

struct Point {
  std::array<double, kMaxDim> x{};

  double& operator[](std::size_t i) { return x[i]; }
  double operator[](std::size_t i) const { return x[i]; }
};

inline double distance(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < kMaxDim; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// Axis-aligned box in R^dim.
struct Box {
  int dim = 1;
  std::array<double, kMaxDim> lo{};
  std::array<double, kMaxDim> hi{};

  double volume() const {
    double v = 1.0;
    for (int i = 0; i < dim; ++i) v *= hi[i] - lo[i];
    return v;
  }
  bool contains(const Point& p) const {
    for (int i = 0; i < dim; ++i) {
      if (p[i] < lo[i] || p[i] > hi[i]) return false;
    }
    return true;
  }
  Point center() const {
    Point c;
    for (int i = 0; i < dim; ++i) c[i] = 0.5 * (lo[i] + hi[i]);
    return c;
  }
  static Box cube(int dim, double lo, double hi) {
    Box b;
    b.dim = dim;
    for (int i = 0; i < dim; ++i) {
      b.lo[i] = lo;
      b.hi[i] = hi;
    }
    return b;
  }
};

}  // namespace loopkit
