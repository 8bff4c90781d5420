#include "loopkit/subordination.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include <boost/math/special_functions/gamma.hpp>

#include "loopkit/errors.hpp"
#include "loopkit/permutations.hpp"
#include "loopkit/quadrature.hpp"

namespace loopkit {
namespace {

constexpr double kTailTolerance = 1e-14;
constexpr long kMaxSeriesTerms = 10'000'000;

void require_rate(double n) {
  if (!(n > 0.0)) throw Error(ErrorCode::OutOfDomain, "subordinator rate n must be positive");
}

// u_(n)^a = scale(a) u^{shifted(a)}; n = inf leaves the kernel alone.
double scale(double n, double a) {
  if (std::isinf(n)) return 1.0;
  const double s = 1.0 + a / n;
  return 1.0 / (s * s);
}

double shifted(double n, double a) { return std::isinf(n) ? a : a / (1.0 + a / n); }

bool same_state(const State& x, const State& y) {
  if (x.index() != y.index()) return false;
  if (const auto* i = std::get_if<std::size_t>(&x)) return *i == std::get<std::size_t>(y);
  return std::get<Point>(x).x == std::get<Point>(y).x;
}

}  // namespace

double subordinated_potential(const Model& model, double n, double alpha, const State& x, const State& y) {
  require_rate(n);
  if (!(alpha >= 0.0)) throw Error(ErrorCode::OutOfDomain, "alpha must be >= 0");
  return scale(n, alpha) * potential(model, shifted(n, alpha), x, y);
}

Matrix subordinated_kernel_matrix(const FiniteChainModel& chain, double n, double alpha) {
  require_rate(n);
  if (!(alpha >= 0.0)) throw Error(ErrorCode::OutOfDomain, "alpha must be >= 0");
  return scale(n, alpha) * chain.kernel_matrix(shifted(n, alpha));
}

Matrix SubordinatedTransition::jump_part() const {
  return matrix - atom * Matrix::Identity(matrix.rows(), matrix.cols());
}

SubordinatedTransition subordinated_transition(const FiniteChainModel& chain, double n, double t) {
  require_rate(n);
  if (!(t >= 0.0) || std::isinf(t)) throw Error(ErrorCode::OutOfDomain, "t must be finite and >= 0");
  const auto size = static_cast<Eigen::Index>(chain.size());
  SubordinatedTransition out;
  const double lambda = n * t;
  out.atom = std::exp(-lambda);
  if (lambda == 0.0) {
    out.matrix = Matrix::Identity(size, size);
    out.terms = 1;
    return out;
  }
  const Matrix r = n * chain.resolvent(n);
  Matrix power = Matrix::Identity(size, size);
  out.matrix = Matrix::Zero(size, size);
  const double log_lambda = std::log(lambda);
  for (long j = 0;; ++j) {
    if (j >= kMaxSeriesTerms) {
      throw Error(ErrorCode::SeriesTruncationFailure,
                  "Poisson series for n t = " + std::to_string(lambda) + " needs too many terms");
    }
    const double jd = static_cast<double>(j);
    const double weight = std::exp(jd * log_lambda - lambda - std::lgamma(jd + 1.0));
    out.matrix += weight * power;
    // P(N > j) for N ~ Poisson(lambda)
    const double tail = boost::math::gamma_p(jd + 1.0, lambda);
    if (tail < kTailTolerance) {
      out.terms = static_cast<int>(j + 1);
      break;
    }
    power = power * r;
  }
  if (!out.matrix.allFinite()) throw Error(ErrorCode::SeriesTruncationFailure, "series diverged");
  return out;
}

Matrix subordinated_laplace_transform(const FiniteChainModel& chain, double n, double alpha, double rel_tol) {
  require_rate(n);
  if (!(alpha > 0.0)) throw Error(ErrorCode::OutOfDomain, "alpha must be positive");
  const auto size = static_cast<Eigen::Index>(chain.size());
  // The integrand is bounded by e^{-alpha t}; beyond this horizon it is
  // below 1e-20 of the total.
  const double horizon = 46.0 / alpha;
  std::map<double, Matrix> cache;
  auto jump = [&](double t) -> const Matrix& {
    auto it = cache.find(t);
    if (it == cache.end()) it = cache.emplace(t, subordinated_transition(chain, n, t).jump_part()).first;
    return it->second;
  };
  Matrix out(size, size);
  for (Eigen::Index x = 0; x < size; ++x) {
    for (Eigen::Index y = 0; y < size; ++y) {
      const auto result = quad::integrate(
          [&](double t) { return std::exp(-alpha * t) * jump(t)(x, y); }, {0.0, 1.0 / n, horizon},
          rel_tol, 1e-300);
      out(x, y) = result.value / chain.m()(y);
    }
  }
  return out;
}

CheckReport check_domination(const Model& model, double n, double alpha,
                             const std::vector<std::pair<State, State>>& samples) {
  CheckReport report;
  report.name = "domination";
  report.tolerance = 1e-12;
  double worst = 0.0;
  int strict = 0, used = 0, skipped = 0;
  for (const auto& [x, y] : samples) {
    if (same_state(x, y)) {
      ++skipped;
      continue;
    }
    const double base = potential(model, 0.0, x, y);
    const double sub = subordinated_potential(model, n, alpha, x, y);
    ++used;
    if (base == 0.0) {
      if (sub > 0.0) worst = kInfinity;
      continue;
    }
    const double ratio = sub / base;
    worst = std::max(worst, ratio);
    if (ratio < 1.0) ++strict;
  }
  report.value = worst;
  report.pass = worst <= 1.0 + report.tolerance;
  char buf[160];
  std::snprintf(buf, sizeof buf, "max u_(n)^a / u = %.6g over %d pairs, strict on %d, %d diagonal skipped",
                worst, used, strict, skipped);
  report.detail = buf;
  return report;
}

MomentValue laplace_nu_moment(const Model& model, const LaplaceSpec& spec, double n, GridOptions options) {
  const auto& functions = spec.functions;
  if (functions.empty()) throw Error(ErrorCode::InvalidArgument, "need at least one test function");
  if (static_cast<int>(functions.size()) > kMaxPermutationOrder) {
    throw Error(ErrorCode::TooManyPermutations, "at most 8 test functions are supported");
  }
  if (spec.rates.size() != functions.size()) {
    throw Error(ErrorCode::InvalidArgument, "need one discount rate per test function");
  }
  for (double a : spec.rates) {
    if (!(a > 0.0)) throw Error(ErrorCode::OutOfDomain, "discount rates alpha_j must be positive");
  }
  if (!(spec.alpha > 0.0)) throw Error(ErrorCode::OutOfDomain, "alpha must be positive");
  require_rate(n);
  const double alpha = spec.alpha;
  const int k = static_cast<int>(functions.size());
  const auto perms = enumerate_regime(Regime::full, k);

  return evaluate_on_grids(model, functions, options, [&](const KernelGrid& grid, const std::vector<Vector>& masses) {
    std::map<double, Matrix> kernels;
    std::map<double, Matrix> closings;
    auto kernel = [&](double b) -> const Matrix& {
      auto it = kernels.find(b);
      if (it == kernels.end()) it = kernels.emplace(b, scale(n, b) * grid.kernel(shifted(n, b))).first;
      return it->second;
    };
    // int u_(n)^alpha(x, z) u_(n)^b(z, y) m(dz)
    auto closing = [&](double b) -> const Matrix& {
      auto it = closings.find(b);
      if (it == closings.end()) {
        const Matrix j = grid.joined(shifted(n, alpha), shifted(n, b));
        it = closings.emplace(b, scale(n, alpha) * scale(n, b) * j).first;
      }
      return it->second;
    };
    std::vector<double> terms;
    terms.reserve(perms.size());
    std::vector<Vector> ordered(masses.size());
    std::vector<double> exponent(masses.size());
    for (const auto& perm : perms) {
      double acc = alpha;
      for (int j = k - 1; j >= 0; --j) {
        const auto p = static_cast<std::size_t>(perm[static_cast<std::size_t>(j)]);
        acc += spec.rates[p];
        exponent[static_cast<std::size_t>(j)] = acc;
        ordered[static_cast<std::size_t>(j)] = masses[p];
      }
      std::vector<const Matrix*> links;
      for (std::size_t j = 1; j < masses.size(); ++j) links.push_back(&kernel(exponent[j]));
      links.push_back(&closing(exponent[0]));
      terms.push_back(cycle_trace(ordered, links));
    }
    return pairwise_sum(terms);
  });
}

ConvergenceTable convergence_table(const Model& model, const LaplaceSpec& spec, const std::vector<double>& n_list,
                                   GridOptions options) {
  ConvergenceTable table;
  const MomentValue limit = laplace_nu_moment(model, spec, kInfinity, options);
  table.limit = limit.value;
  table.limit_error = limit.error_estimate;
  table.monotone = true;
  for (double n : n_list) {
    const MomentValue v = laplace_nu_moment(model, spec, n, options);
    ConvergenceRow row{n, v.value, v.error_estimate, std::abs(v.value - limit.value)};
    if (!table.rows.empty() && row.deviation > table.rows.back().deviation) table.monotone = false;
    table.max_deviation = std::max(table.max_deviation, row.deviation);
    table.rows.push_back(row);
  }
  return table;
}

}  // namespace loopkit
