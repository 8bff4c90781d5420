#include "loopkit/moments.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "loopkit/assumptions.hpp"
#include "loopkit/errors.hpp"

namespace loopkit {
namespace {

double trace_of_product(const std::vector<const Matrix*>& factors) {
  const std::size_t k = factors.size();
  if (k == 1) return factors[0]->trace();
  Matrix acc = *factors[0];
  for (std::size_t j = 1; j + 1 < k; ++j) acc = acc * (*factors[j]);
  return acc.cwiseProduct(factors[k - 1]->transpose()).sum();
}

MomentValue extrapolate(double v1, double v2, double v3) {
  const double d1 = v2 - v1, d2 = v3 - v2;
  if (d2 == 0.0) return {v3, std::abs(d1)};
  const double ratio = d1 / d2;
  if (!(ratio > 1.5) || !std::isfinite(ratio)) return {v3, std::max(std::abs(d1), std::abs(d2))};
  const double step = d2 / (ratio - 1.0);
  return {v3 + step, std::max(std::abs(step), std::abs(d2))};
}

void require_functions(const std::vector<TestFunction>& functions) {
  if (functions.empty()) throw Error(ErrorCode::InvalidArgument, "need at least one test function");
  if (static_cast<int>(functions.size()) > kMaxPermutationOrder) {
    throw Error(ErrorCode::TooManyPermutations, "at most 8 test functions are supported");
  }
}

bool any_zero(const std::vector<TestFunction>& functions) {
  return std::any_of(functions.begin(), functions.end(), [](const auto& f) { return f.is_zero(); });
}

std::vector<Vector> permuted(const std::vector<Vector>& masses, const Permutation& perm) {
  std::vector<Vector> out;
  out.reserve(perm.size());
  for (int p : perm) out.push_back(masses[static_cast<std::size_t>(p)]);
  return out;
}

double mu_on_grid(const KernelGrid& grid, const std::vector<Vector>& masses, Regime regime) {
  if (masses.size() == 2) {
    // The 2-cycle u(x,y)u(y,x) is the most singular integrand; it gets its
    // own cell-pair quadrature. Both orders give the same value.
    const double ordered = masses[0].dot(grid.pair_product(0.0) * masses[1]);
    return regime == Regime::full ? 2.0 * ordered : ordered;
  }
  const Matrix u = grid.kernel(0.0);
  std::vector<Matrix> a;
  for (const auto& m : masses) a.push_back(m.asDiagonal() * u);
  std::vector<double> terms;
  for (const auto& perm : enumerate_regime(regime, static_cast<int>(masses.size()))) {
    if (regime == Regime::cyclic_translations && !terms.empty()) break;
    std::vector<const Matrix*> factors;
    for (int p : perm) factors.push_back(&a[static_cast<std::size_t>(p)]);
    terms.push_back(trace_of_product(factors));
  }
  return pairwise_sum(terms);
}

}  // namespace

MomentValue evaluate_on_grids(const Model& model, const std::vector<TestFunction>& functions,
                              GridOptions options, const GridFn& fn) {
  auto masses_on = [&](const KernelGrid& grid) {
    std::vector<Vector> masses;
    masses.reserve(functions.size());
    for (const auto& f : functions) masses.push_back(grid.sample(f).cwiseProduct(grid.weights()));
    return masses;
  };
  if (const auto* chain = std::get_if<FiniteChainModel>(&model)) {
    const auto grid = make_grid(*chain);
    return {fn(*grid, masses_on(*grid)), 0.0};
  }
  const auto& bm = std::get<KilledBrownianModel>(model);
  const Box region = bounding_support(functions);
  if (region.dim != bm.dim()) throw Error(ErrorCode::InvalidArgument, "function dimension mismatch");
  const int cells = options.cells_per_axis > 0 ? options.cells_per_axis : default_cells_per_axis(bm.dim());
  auto at = [&](int n) {
    const auto grid = make_grid(bm, region, std::max(1, n));
    return fn(*grid, masses_on(*grid));
  };
  const double fine = at(cells);
  const double half = at(cells / 2);
  if (cells % 4 != 0) return {fine, std::abs(fine - half)};
  return extrapolate(at(cells / 4), half, fine);
}

double cycle_trace(const std::vector<Vector>& masses, const std::vector<const Matrix*>& links) {
  if (masses.size() != links.size() || masses.empty()) {
    throw Error(ErrorCode::InvalidArgument, "cycle needs one link per mass");
  }
  std::vector<Matrix> a;
  a.reserve(masses.size());
  for (std::size_t j = 0; j < masses.size(); ++j) a.push_back(masses[j].asDiagonal() * (*links[j]));
  std::vector<const Matrix*> factors;
  for (const auto& m : a) factors.push_back(&m);
  return trace_of_product(factors);
}

double rooted_chain(const Vector& row, const std::vector<Vector>& masses,
                    const std::vector<const Matrix*>& links, const Vector& col) {
  if (masses.empty() || links.size() + 1 != masses.size()) {
    throw Error(ErrorCode::InvalidArgument, "rooted chain needs k masses and k-1 links");
  }
  Vector v = col;
  for (std::size_t j = masses.size(); j-- > 0;) {
    v = masses[j].cwiseProduct(v);
    if (j > 0) v = (*links[j - 1]) * v;
  }
  return row.dot(v);
}

double grid_ordered_cycle(const KernelGrid& grid, const std::vector<Vector>& masses, double alpha) {
  const Matrix u = grid.kernel(alpha);
  std::vector<const Matrix*> links(masses.size(), &u);
  return cycle_trace(masses, links);
}

double grid_nu_term(const KernelGrid& grid, const std::vector<Vector>& masses, double alpha) {
  const Matrix u = grid.kernel(alpha);
  const Matrix closing = grid.second_order(alpha);
  std::vector<const Matrix*> links(masses.size(), &u);
  links.back() = &closing;
  return cycle_trace(masses, links);
}

MomentValue mu_moment(const Model& model, const std::vector<TestFunction>& functions, Regime regime,
                      GridOptions options) {
  require_functions(functions);
  if (functions.size() == 1) {
    throw Error(ErrorCode::InfiniteMoment, "k = 1 loop-measure moment is int u(x,x) f(x) m(dx) = infinity");
  }
  if (any_zero(functions)) return {0.0, 0.0};
  return evaluate_on_grids(model, functions, options, [&](const KernelGrid& grid, const std::vector<Vector>& masses) {
    return mu_on_grid(grid, masses, regime);
  });
}

MomentValue ordered_mu_moment(const Model& model, const std::vector<TestFunction>& functions,
                              GridOptions options) {
  return mu_moment(model, functions, Regime::cyclic_translations, options);
}

MomentValue nu_moment(const Model& model, const std::vector<TestFunction>& functions, double alpha,
                      GridOptions options) {
  require_functions(functions);
  if (alpha == 0.0) {
    throw Error(ErrorCode::InfiniteMoment, "companion-measure moments need alpha > 0");
  }
  if (!(alpha > 0.0)) throw Error(ErrorCode::OutOfDomain, "alpha must be positive");
  if (any_zero(functions)) return {0.0, 0.0};
  return evaluate_on_grids(model, functions, options, [&](const KernelGrid& grid, const std::vector<Vector>& masses) {
    const Matrix u = grid.kernel(alpha);
    const Matrix closing = grid.second_order(alpha);
    std::vector<double> terms;
    for (const auto& perm : enumerate_regime(Regime::full, static_cast<int>(masses.size()))) {
      std::vector<const Matrix*> links(perm.size(), &u);
      links.back() = &closing;
      terms.push_back(cycle_trace(permuted(masses, perm), links));
    }
    return pairwise_sum(terms);
  });
}

MomentValue qzz_moment(const Model& model, const State& root, const std::vector<TestFunction>& functions,
                       double alpha, bool ordered, GridOptions options) {
  require_functions(functions);
  if (!(alpha >= 0.0)) throw Error(ErrorCode::OutOfDomain, "alpha must be >= 0");
  if (any_zero(functions)) return {0.0, 0.0};
  return evaluate_on_grids(model, functions, options, [&](const KernelGrid& grid, const std::vector<Vector>& masses) {
    if (masses.size() == 1) return masses[0].dot(grid.root_pair(alpha, root));
    const Matrix u = grid.kernel(alpha);
    const Vector row = grid.root_row(alpha, root);
    const Vector col = grid.root_col(alpha, root);
    std::vector<const Matrix*> links(masses.size() - 1, &u);
    if (ordered) return rooted_chain(row, masses, links, col);
    std::vector<double> terms;
    for (const auto& perm : enumerate_regime(Regime::full, static_cast<int>(masses.size()))) {
      terms.push_back(rooted_chain(row, permuted(masses, perm), links, col));
    }
    return pairwise_sum(terms);
  });
}

double derivative_identity_residual(const Model& model, double alpha, const State& x, const State& y,
                                    double h_step) {
  if (!(h_step > 0.0) || !(alpha > h_step)) {
    throw Error(ErrorCode::InvalidArgument, "need 0 < h_step < alpha");
  }
  const double derivative =
      (potential(model, alpha + h_step, x, y) - potential(model, alpha - h_step, x, y)) / (2.0 * h_step);
  double inner = 0.0;
  if (const auto* chain = std::get_if<FiniteChainModel>(&model)) {
    const Matrix u = chain->kernel_matrix(alpha);
    const auto i = static_cast<Eigen::Index>(std::get<std::size_t>(x));
    const auto j = static_cast<Eigen::Index>(std::get<std::size_t>(y));
    inner = (u.row(i).transpose().cwiseProduct(chain->m())).dot(u.col(j));
  } else {
    const auto& bm = std::get<KilledBrownianModel>(model);
    const double r = distance(std::get<Point>(x), std::get<Point>(y));
    inner = bm_inner_product(bm, alpha, alpha, r).value;
  }
  return std::abs(inner + derivative);
}

}  // namespace loopkit
