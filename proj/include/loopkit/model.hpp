#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "loopkit/geometry.hpp"

namespace loopkit {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct Rate {
  std::string from;
  std::string to;
  double rate = 0.0;
};

// Continuous-time chain on finitely many states, killed at rates kill(x).
// Potential densities are taken with respect to the weights m:
//   u^alpha(x, y) = [(alpha I - G)^-1](x, y) / m(y).
// Immutable after construction.
class FiniteChainModel {
 public:
  static FiniteChainModel build(std::vector<std::string> states, const std::vector<double>& m,
                                const std::vector<Rate>& rates, const std::vector<double>& kill);

  // Generator given directly; off-diagonal entries are the jump rates.
  static FiniteChainModel from_generator(std::vector<std::string> states, const Matrix& generator,
                                         const Vector& m);

  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& state_ids() const { return ids_; }
  std::size_t index_of(const std::string& id) const;

  const Vector& m() const { return m_; }
  const Matrix& generator() const { return generator_; }
  double rate(std::size_t x, std::size_t y) const { return x == y ? 0.0 : generator_(x, y); }
  double kill(std::size_t x) const { return -generator_.row(x).sum(); }
  // Total rate of leaving x by a jump or by killing.
  double exit_rate(std::size_t x) const { return -generator_(x, x); }

  // (alpha I - G)^-1, the resolvent acting on mass vectors.
  Matrix resolvent(double alpha) const;
  // Matrix of u^alpha(x, y); alpha = 0 is cached at construction.
  Matrix kernel_matrix(double alpha) const;
  const Matrix& green() const { return green_; }

  double potential(double alpha, std::size_t x, std::size_t y) const;

  // e^{tG}
  Matrix transition(double t) const;

  // alpha beyond which every entry of u^alpha is below eps.
  double vanishing_threshold(double eps) const;

  bool is_symmetric() const;

 private:
  FiniteChainModel() = default;
  void finalize();

  std::vector<std::string> ids_;
  Vector m_;
  Matrix generator_;
  Matrix green_;
};

// Brownian motion in R^dim killed at constant rate kappa.
class KilledBrownianModel {
 public:
  KilledBrownianModel(int dim, double kappa, std::optional<Box> box = std::nullopt);

  int dim() const { return dim_; }
  double kappa() const { return kappa_; }
  const Box& box() const { return box_; }
  bool diagonal_infinite() const { return dim_ >= 2; }

  // sqrt(2 (alpha + kappa))
  double lambda(double alpha) const;

  // u^alpha as a function of r = |x - y|; +inf at r = 0 when dim >= 2.
  double profile(double alpha, double r) const;
  double potential(double alpha, const Point& x, const Point& y) const;

  // int u^alpha(x, z) u^alpha(z, y) dz over all of R^dim, as a function of
  // r = |x - y|. Equals -d/dalpha u^alpha off the diagonal and stays finite
  // on it for dim <= 3.
  double second_order_profile(double alpha, double r) const;

  // int u^a(x, z) u^b(z, y) dz as a function of r = |x - y|; by the
  // resolvent identity (u^a - u^b)/(b - a), and second_order_profile when
  // a == b. Finite at r = 0 for dim <= 3.
  double joined_profile(double a, double b, double r) const;

  // -d/dalpha of the profile, closed form.
  double profile_alpha_derivative(double alpha, double r) const;

  // Exponent p with u(r) ~ r^-p at 0 (a logarithm counts as p = 0).
  double singularity_order() const { return dim_ == 3 ? 1.0 : 0.0; }

  double vanishing_threshold(double r, double eps) const;

 private:
  int dim_;
  double kappa_;
  Box box_;
};

// Radial kernel |x - y|^-exponent in R^dim. Only used to exercise the
// integrability diagnostic on profiles that are not backed by a process.
struct PowerLawProfile {
  int dim = 4;
  double exponent = 2.0;

  double value(double r) const { return r == 0.0 ? kInfinity : std::pow(r, -exponent); }
};

using Model = std::variant<FiniteChainModel, KilledBrownianModel>;
using State = std::variant<std::size_t, Point>;

/// u^alpha(x, y) for either kind of model. Throws OutOfDomain when the state
/// kind does not match the model, the index is out of range, or alpha < 0.
double potential(const Model& model, double alpha, const State& x, const State& y);

}  // namespace loopkit
