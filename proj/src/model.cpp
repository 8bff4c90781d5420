#include "loopkit/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <unsupported/Eigen/MatrixFunctions>

#include "loopkit/errors.hpp"
#include "loopkit/special_functions.hpp"

namespace loopkit {

FiniteChainModel FiniteChainModel::build(std::vector<std::string> states,
                                         const std::vector<double>& m,
                                         const std::vector<Rate>& rates,
                                         const std::vector<double>& kill) {
  const std::size_t n = states.size();
  if (n == 0) throw Error(ErrorCode::MalformedInput, "finite chain needs at least one state");
  if (std::set<std::string>(states.begin(), states.end()).size() != n) {
    throw Error(ErrorCode::MalformedInput, "state ids must be unique");
  }
  if (m.size() != n || kill.size() != n) {
    throw Error(ErrorCode::MalformedInput, "m and kill must have one entry per state");
  }

  FiniteChainModel model;
  model.ids_ = std::move(states);
  model.m_ = Vector(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (!(m[i] > 0.0) || !std::isfinite(m[i])) {
      throw Error(ErrorCode::ZeroMeasureWeight, "m(" + model.ids_[i] + ") must be positive and finite");
    }
    model.m_[static_cast<Eigen::Index>(i)] = m[i];
  }

  Matrix g = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (const Rate& r : rates) {
    if (!(r.rate >= 0.0) || !std::isfinite(r.rate)) {
      throw Error(ErrorCode::NegativeRate, "rate " + r.from + "->" + r.to + " must be >= 0");
    }
    const auto x = static_cast<Eigen::Index>(model.index_of(r.from));
    const auto y = static_cast<Eigen::Index>(model.index_of(r.to));
    if (x == y) throw Error(ErrorCode::MalformedInput, "self-transition rate for " + r.from);
    g(x, y) += r.rate;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(kill[i] >= 0.0) || !std::isfinite(kill[i])) {
      throw Error(ErrorCode::NegativeRate, "kill(" + model.ids_[i] + ") must be >= 0");
    }
    const auto ii = static_cast<Eigen::Index>(i);
    g(ii, ii) = -kill[i] - g.row(ii).sum();
  }
  model.generator_ = std::move(g);
  model.finalize();
  return model;
}

FiniteChainModel FiniteChainModel::from_generator(std::vector<std::string> states,
                                                  const Matrix& generator, const Vector& m) {
  const std::size_t n = states.size();
  if (generator.rows() != static_cast<Eigen::Index>(n) || generator.cols() != generator.rows() ||
      m.size() != generator.rows()) {
    throw Error(ErrorCode::MalformedInput, "generator and m must match the state list");
  }
  std::vector<Rate> rates;
  std::vector<double> kill(n), weights(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    weights[i] = m[ii];
    kill[i] = -generator.row(ii).sum();
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && generator(ii, static_cast<Eigen::Index>(j)) != 0.0) {
        rates.push_back({states[i], states[j], generator(ii, static_cast<Eigen::Index>(j))});
      }
    }
    // Round-off in the row sum must not turn a zero killing rate negative.
    if (kill[i] < 0.0 && kill[i] > -1e-12 * std::abs(generator(ii, ii))) kill[i] = 0.0;
  }
  return build(std::move(states), weights, rates, kill);
}

void FiniteChainModel::finalize() {
  const Eigen::Index n = generator_.rows();
  const Matrix neg_g = -generator_;
  Eigen::FullPivLU<Matrix> lu(neg_g);
  if (!lu.isInvertible()) {
    throw Error(ErrorCode::NonTransient, "-G is singular; the chain is not transient");
  }
  // M-matrix certificate: (-G) h = e must have a finite nonnegative solution.
  const Vector h = lu.solve(Vector::Ones(n));
  const double residual = (neg_g * h - Vector::Ones(n)).cwiseAbs().maxCoeff();
  const double scale = h.cwiseAbs().maxCoeff();
  if (!h.allFinite() || (h.array() < -1e-12 * scale).any() || residual > 1e-8 * (1.0 + scale)) {
    throw Error(ErrorCode::NonTransient, "(-G) h = e has no finite nonnegative solution");
  }
  green_ = lu.inverse() * m_.cwiseInverse().asDiagonal();
  green_ = green_.cwiseMax(0.0);
}

std::size_t FiniteChainModel::index_of(const std::string& id) const {
  const auto it = std::find(ids_.begin(), ids_.end(), id);
  if (it == ids_.end()) throw Error(ErrorCode::OutOfDomain, "unknown state '" + id + "'");
  return static_cast<std::size_t>(it - ids_.begin());
}

Matrix FiniteChainModel::resolvent(double alpha) const {
  if (!(alpha >= 0.0)) throw Error(ErrorCode::OutOfDomain, "alpha must be >= 0");
  const Eigen::Index n = generator_.rows();
  if (alpha == 0.0) return green_ * m_.asDiagonal();
  Matrix a = alpha * Matrix::Identity(n, n) - generator_;
  return a.partialPivLu().inverse();
}

Matrix FiniteChainModel::kernel_matrix(double alpha) const {
  if (alpha == 0.0) return green_;
  return resolvent(alpha) * m_.cwiseInverse().asDiagonal();
}

double FiniteChainModel::potential(double alpha, std::size_t x, std::size_t y) const {
  if (x >= size() || y >= size()) throw Error(ErrorCode::OutOfDomain, "state index out of range");
  if (alpha == 0.0) return green_(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y));
  return kernel_matrix(alpha)(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y));
}

Matrix FiniteChainModel::transition(double t) const {
  if (!(t >= 0.0)) throw Error(ErrorCode::OutOfDomain, "time must be >= 0");
  Matrix scaled = generator_ * t;
  Matrix p = scaled.exp();
  if (!p.allFinite()) throw Error(ErrorCode::MatrixExponentialFailure, "non-finite e^{tG}");
  return p;
}

double FiniteChainModel::vanishing_threshold(double eps) const {
  // Rows of alpha (alpha I - G)^-1 are sub-probabilities, so
  // u^alpha(x, y) <= 1 / (alpha m(y)).
  return 1.0 / (eps * m_.minCoeff());
}

bool FiniteChainModel::is_symmetric() const {
  if (!generator_.isApprox(generator_.transpose(), 0.0)) return false;
  return (m_.array() == m_[0]).all();
}

KilledBrownianModel::KilledBrownianModel(int dim, double kappa, std::optional<Box> box)
    : dim_(dim), kappa_(kappa) {
  if (dim < 1 || dim > 3) throw Error(ErrorCode::InvalidArgument, "killed BM needs dim in {1,2,3}");
  if (!(kappa > 0.0) || !std::isfinite(kappa)) {
    throw Error(ErrorCode::InvalidArgument, "killing rate must be positive");
  }
  box_ = box.value_or(Box::cube(dim, -1.0, 1.0));
  if (box_.dim != dim || !(box_.volume() > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "bounding box must have positive volume");
  }
}

double KilledBrownianModel::lambda(double alpha) const {
  if (!(alpha >= 0.0)) throw Error(ErrorCode::OutOfDomain, "alpha must be >= 0");
  return std::sqrt(2.0 * (alpha + kappa_));
}

double KilledBrownianModel::profile(double alpha, double r) const {
  const double lam = lambda(alpha);
  switch (dim_) {
    case 1: return std::exp(-lam * r) / lam;
    case 2: return r == 0.0 ? kInfinity : bessel_k0(lam * r) / std::numbers::pi;
    default: return r == 0.0 ? kInfinity : std::exp(-lam * r) / (2.0 * std::numbers::pi * r);
  }
}

double KilledBrownianModel::potential(double alpha, const Point& x, const Point& y) const {
  return profile(alpha, distance(x, y));
}

double KilledBrownianModel::profile_alpha_derivative(double alpha, double r) const {
  const double lam = lambda(alpha);
  switch (dim_) {
    case 1: return std::exp(-lam * r) * (lam * r + 1.0) / (lam * lam * lam);
    case 2:
      if (r == 0.0) return 1.0 / (std::numbers::pi * lam * lam);
      return r * bessel_k1(lam * r) / (std::numbers::pi * lam);
    default: return std::exp(-lam * r) / (2.0 * std::numbers::pi * lam);
  }
}

double KilledBrownianModel::second_order_profile(double alpha, double r) const {
  return profile_alpha_derivative(alpha, r);
}

double KilledBrownianModel::joined_profile(double a, double b, double r) const {
  if (a == b) return second_order_profile(a, r);
  if (!(a >= 0.0) || !(b >= 0.0) || !(r >= 0.0)) throw Error(ErrorCode::OutOfDomain, "need a, b, r >= 0");
  const double la = lambda(a), lb = lambda(b);
  double diff = 0.0;  // u^a(r) - u^b(r), written to avoid cancellation
  switch (dim_) {
    case 1: diff = std::exp(-la * r) / la - std::exp(-lb * r) / lb; break;
    case 2:
      diff = r == 0.0 ? std::log(lb / la) / std::numbers::pi
                      : (bessel_k0(la * r) - bessel_k0(lb * r)) / std::numbers::pi;
      break;
    default:
      diff = r == 0.0 ? (lb - la) / (2.0 * std::numbers::pi)
                      : -std::exp(-la * r) * std::expm1(-(lb - la) * r) / (2.0 * std::numbers::pi * r);
  }
  return diff / (b - a);
}

double KilledBrownianModel::vanishing_threshold(double r, double eps) const {
  if (!(r > 0.0)) throw Error(ErrorCode::OutOfDomain, "threshold needs r > 0");
  double alpha = 1.0;
  while (profile(alpha, r) >= eps) alpha *= 2.0;
  return alpha;
}

double potential(const Model& model, double alpha, const State& x, const State& y) {
  if (!(alpha >= 0.0)) throw Error(ErrorCode::OutOfDomain, "alpha must be >= 0");
  if (const auto* chain = std::get_if<FiniteChainModel>(&model)) {
    const auto* i = std::get_if<std::size_t>(&x);
    const auto* j = std::get_if<std::size_t>(&y);
    if (i == nullptr || j == nullptr) throw Error(ErrorCode::OutOfDomain, "finite chain needs state indices");
    return chain->potential(alpha, *i, *j);
  }
  const auto& bm = std::get<KilledBrownianModel>(model);
  const auto* p = std::get_if<Point>(&x);
  const auto* q = std::get_if<Point>(&y);
  if (p == nullptr || q == nullptr) throw Error(ErrorCode::OutOfDomain, "euclidean model needs points");
  return bm.potential(alpha, *p, *q);
}

}  // namespace loopkit
