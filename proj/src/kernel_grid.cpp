#include "loopkit/kernel_grid.hpp"

#include <algorithm>
#include <cmath>
#include <boost/math/quadrature/gauss.hpp>
#include <functional>
#include <limits>
#include <numbers>

#include "loopkit/errors.hpp"
#include "loopkit/quadrature.hpp"

namespace loopkit {

TestFunction TestFunction::on_states(Vector values) {
  if (!values.allFinite()) throw Error(ErrorCode::InvalidArgument, "test function must be bounded");
  TestFunction f;
  f.kind_ = Kind::state_values;
  f.values_ = std::move(values);
  return f;
}

TestFunction TestFunction::state_indicator(std::size_t state, std::size_t num_states) {
  if (state >= num_states) throw Error(ErrorCode::OutOfDomain, "indicator state out of range");
  Vector v = Vector::Zero(static_cast<Eigen::Index>(num_states));
  v[static_cast<Eigen::Index>(state)] = 1.0;
  return on_states(std::move(v));
}

TestFunction TestFunction::box_indicator(const Box& box) {
  if (!(box.volume() >= 0.0)) throw Error(ErrorCode::InvalidArgument, "box must have lo <= hi");
  TestFunction f;
  f.kind_ = Kind::box_indicator;
  f.support_ = box;
  return f;
}

TestFunction TestFunction::gaussian_bump(const Point& center, double sigma, int dim) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "bump width must be positive");
  TestFunction f;
  f.kind_ = Kind::gaussian_bump;
  f.center_ = center;
  f.sigma_ = sigma;
  f.support_.dim = dim;
  for (int i = 0; i < dim; ++i) {
    const auto k = static_cast<std::size_t>(i);
    f.support_.lo[k] = center[k] - 4.0 * sigma;
    f.support_.hi[k] = center[k] + 4.0 * sigma;
  }
  return f;
}

double TestFunction::operator()(std::size_t state) const {
  if (kind_ != Kind::state_values) throw Error(ErrorCode::OutOfDomain, "function is not defined on states");
  if (state >= static_cast<std::size_t>(values_.size())) throw Error(ErrorCode::OutOfDomain, "state out of range");
  return values_[static_cast<Eigen::Index>(state)];
}

double TestFunction::operator()(const Point& x) const {
  if (kind_ == Kind::state_values) throw Error(ErrorCode::OutOfDomain, "function is defined on states");
  if (!support_.contains(x)) return 0.0;
  if (kind_ == Kind::box_indicator) return 1.0;
  double r2 = 0.0;
  for (int i = 0; i < support_.dim; ++i) {
    const auto k = static_cast<std::size_t>(i);
    r2 += (x[k] - center_[k]) * (x[k] - center_[k]);
  }
  return std::exp(-r2 / (2.0 * sigma_ * sigma_));
}

double TestFunction::cell_average(const Box& cell) const {
  if (kind_ == Kind::state_values) throw Error(ErrorCode::OutOfDomain, "function is defined on states");
  double avg = 1.0;
  for (int i = 0; i < cell.dim; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const double lo = std::max(cell.lo[k], support_.lo[k]);
    const double hi = std::min(cell.hi[k], support_.hi[k]);
    const double width = cell.hi[k] - cell.lo[k];
    if (hi <= lo) return 0.0;
    if (kind_ == Kind::box_indicator) {
      avg *= (hi - lo) / width;
    } else {
      const double s = sigma_ * std::numbers::sqrt2;
      avg *= 0.5 * std::sqrt(std::numbers::pi) * s *
             (std::erf((hi - center_[k]) / s) - std::erf((lo - center_[k]) / s)) / width;
    }
  }
  return avg;
}

bool TestFunction::is_zero() const {
  switch (kind_) {
    case Kind::state_values: return (values_.array() == 0.0).all();
    case Kind::box_indicator: return support_.volume() == 0.0;
    case Kind::gaussian_bump: return false;
  }
  return false;
}

namespace {

class ChainGrid final : public KernelGrid {
 public:
  explicit ChainGrid(const FiniteChainModel& chain) : chain_(chain) {}

  std::size_t size() const override { return chain_.size(); }
  const Vector& weights() const override { return chain_.m(); }
  Matrix kernel(double alpha) const override { return chain_.kernel_matrix(alpha); }
  Matrix second_order(double alpha) const override {
    const Matrix u = chain_.kernel_matrix(alpha);
    return u * chain_.m().asDiagonal() * u;
  }
  Matrix joined(double a, double b) const override {
    return chain_.kernel_matrix(a) * chain_.m().asDiagonal() * chain_.kernel_matrix(b);
  }
  Matrix pair_product(double alpha) const override {
    const Matrix u = chain_.kernel_matrix(alpha);
    return u.cwiseProduct(u.transpose());
  }
  Vector root_pair(double alpha, const State& root) const override {
    const Matrix u = chain_.kernel_matrix(alpha);
    return u.row(index(root)).transpose().cwiseProduct(u.col(index(root)));
  }
  Vector sample(const TestFunction& f) const override {
    if (f.kind() != TestFunction::Kind::state_values || f.values().size() != chain_.m().size()) {
      throw Error(ErrorCode::InvalidArgument, "test function does not live on this chain");
    }
    return f.values();
  }
  Vector root_row(double alpha, const State& root) const override {
    return chain_.kernel_matrix(alpha).row(index(root)).transpose();
  }
  Vector root_col(double alpha, const State& root) const override {
    return chain_.kernel_matrix(alpha).col(index(root));
  }
  bool exact() const override { return true; }

 private:
  Eigen::Index index(const State& root) const {
    const auto* i = std::get_if<std::size_t>(&root);
    if (i == nullptr || *i >= chain_.size()) throw Error(ErrorCode::OutOfDomain, "root is not a state");
    return static_cast<Eigen::Index>(*i);
  }

  const FiniteChainModel& chain_;
};

// (u^alpha)^2 as a function of r.
double squared_profile(const KilledBrownianModel& bm, double alpha, double r) {
  const double u = bm.profile(alpha, r);
  return u * u;
}

class BrownianGrid final : public KernelGrid {
  using Radial = std::function<double(double)>;

 public:
  BrownianGrid(const KilledBrownianModel& bm, const Box& region, int cells)
      : bm_(bm), region_(region), cells_(cells) {
    if (region.dim != bm.dim()) throw Error(ErrorCode::InvalidArgument, "grid dimension mismatch");
    if (!(region.volume() > 0.0)) throw Error(ErrorCode::InvalidArgument, "grid region has no volume");
    if (cells < 1) throw Error(ErrorCode::InvalidArgument, "need at least one cell per axis");
    std::size_t total = 1;
    for (int i = 0; i < bm.dim(); ++i) total *= static_cast<std::size_t>(cells);
    centers_.resize(total);
    index_.resize(total);
    cell_ = Box{};
    cell_.dim = bm.dim();
    for (int i = 0; i < bm.dim(); ++i) {
      const auto k = static_cast<std::size_t>(i);
      width_[k] = (region.hi[k] - region.lo[k]) / cells;
      cell_.lo[k] = -0.5 * width_[k];
      cell_.hi[k] = 0.5 * width_[k];
    }
    for (std::size_t n = 0; n < total; ++n) {
      std::size_t rest = n;
      for (int i = 0; i < bm.dim(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        const std::size_t c = rest % static_cast<std::size_t>(cells);
        rest /= static_cast<std::size_t>(cells);
        index_[n][k] = static_cast<int>(c);
        centers_[n][k] = region.lo[k] + (static_cast<double>(c) + 0.5) * width_[k];
      }
    }
    weights_ = Vector::Constant(static_cast<Eigen::Index>(total), cell_.volume());
  }

  std::size_t size() const override { return centers_.size(); }
  const Vector& weights() const override { return weights_; }

  // Centre-to-centre values off the diagonal; on the diagonal the mean of
  // u^alpha over the cell about its centre, which integrates the singularity.
  Matrix kernel(double alpha) const override {
    auto g = [&](double r) { return bm_.profile(alpha, r); };
    return centre_matrix(g, quad::box_radial_integral(g, Point{}, cell_, 1e-10).value / cell_.volume());
  }
  Matrix second_order(double alpha) const override {
    return centre_matrix([&](double r) { return bm_.second_order_profile(alpha, r); },
                         bm_.second_order_profile(alpha, 0.0));
  }
  Matrix joined(double a, double b) const override {
    return centre_matrix([&](double r) { return bm_.joined_profile(a, b, r); }, bm_.joined_profile(a, b, 0.0));
  }
  Matrix pair_product(double alpha) const override {
    return pair_matrix([&](double r) { return squared_profile(bm_, alpha, r); });
  }
  Vector root_pair(double alpha, const State& root) const override {
    return root_means([&](double r) { return squared_profile(bm_, alpha, r); }, *root_point(root));
  }

  Vector sample(const TestFunction& f) const override {
    if (f.kind() == TestFunction::Kind::state_values) {
      throw Error(ErrorCode::InvalidArgument, "state-valued function on a euclidean model");
    }
    Vector v(static_cast<Eigen::Index>(size()));
    for (std::size_t i = 0; i < size(); ++i) v[static_cast<Eigen::Index>(i)] = f.cell_average(cell_at(i));
    return v;
  }

  Vector root_row(double alpha, const State& root) const override {
    return root_means([&](double r) { return bm_.profile(alpha, r); }, *root_point(root));
  }
  Vector root_col(double alpha, const State& root) const override { return root_row(alpha, root); }
  bool exact() const override { return false; }

 private:
  const Point* root_point(const State& root) const {
    const auto* z = std::get_if<Point>(&root);
    if (z == nullptr) throw Error(ErrorCode::OutOfDomain, "root must be a point");
    for (auto k = static_cast<std::size_t>(bm_.dim()); k < kMaxDim; ++k) {
      if ((*z)[k] != 0.0) {
        throw Error(ErrorCode::OutOfDomain, "root has coordinates beyond the model dimension");
      }
    }
    return z;
  }

  Box cell_at(std::size_t i) const {
    Box b = cell_;
    for (int d = 0; d < cell_.dim; ++d) {
      const auto k = static_cast<std::size_t>(d);
      b.lo[k] += centers_[i][k];
      b.hi[k] += centers_[i][k];
    }
    return b;
  }

  Matrix centre_matrix(const Radial& g, double diagonal) const {
    const auto n = static_cast<Eigen::Index>(size());
    Matrix k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      k(i, i) = diagonal;
      for (Eigen::Index j = 0; j < i; ++j) {
        k(i, j) = k(j, i) = g(distance(centers_[static_cast<std::size_t>(i)], centers_[static_cast<std::size_t>(j)]));
      }
    }
    return k;
  }

  // Cell-pair averages of g(|x - y|). They depend only on the index offset,
  // so each distinct offset is integrated once.
  Matrix pair_matrix(const Radial& g) const {
    const int d = bm_.dim();
    std::size_t distinct = 1;
    for (int k = 0; k < d; ++k) distinct *= static_cast<std::size_t>(cells_);
    std::vector<double> table(distinct, std::numeric_limits<double>::quiet_NaN());
    const auto n = static_cast<Eigen::Index>(size());
    Matrix w(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j <= i; ++j) {
        std::array<int, kMaxDim> off{};
        std::size_t key = 0;
        for (int k = d; k-- > 0;) {
          const auto kk = static_cast<std::size_t>(k);
          off[kk] = std::abs(index_[static_cast<std::size_t>(i)][kk] - index_[static_cast<std::size_t>(j)][kk]);
          key = key * static_cast<std::size_t>(cells_) + static_cast<std::size_t>(off[kk]);
        }
        if (std::isnan(table[key])) table[key] = pair_mean(g, off);
        w(i, j) = w(j, i) = table[key];
      }
    }
    return w;
  }

  // Cell averages of g(|x - z|). Cells within 1.5 widths of z use cones from z.
  Vector root_means(const Radial& g, const Point& z) const {
    const int d = bm_.dim();
    Vector v(static_cast<Eigen::Index>(size()));
    for (std::size_t i = 0; i < size(); ++i) {
      const Box cell = cell_at(i);
      bool near = true;
      for (int k = 0; k < d; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        if (std::abs(centers_[i][kk] - z[kk]) > 1.5 * width_[kk]) near = false;
      }
      double mean = 0.0;
      if (near) {
        mean = quad::box_radial_integral(g, z, cell, 1e-10).value / cell.volume();
      } else {
        std::array<Piece, kMaxDim> pieces{};
        for (int k = 0; k < d; ++k) {
          const auto kk = static_cast<std::size_t>(k);
          pieces[kk] = {cell.lo[kk] - z[kk], cell.hi[kk] - z[kk], Piece::flat};
        }
        mean = tensor_mean(g, pieces);
      }
      v[static_cast<Eigen::Index>(i)] = mean;
    }
    return v;
  }

  // One axis of an integration box with its weight as a function of s.
  struct Piece {
    enum Shape { flat, folded, rising, falling };
    double lo = 0.0, hi = 0.0;
    Shape shape = flat;
  };

  double piece_weight(const Piece& p, double s, double h) const {
    switch (p.shape) {
      case Piece::flat: return 1.0 / (p.hi - p.lo);
      case Piece::folded: return 2.0 * (h - s) / (h * h);
      case Piece::rising: return (s - p.lo) / (h * h);
      case Piece::falling: return (p.hi - s) / (h * h);
    }
    return 0.0;
  }

  // Weighted mean of g(|s|) over a product of pieces by tensor Gauss-Legendre;
  // g must be smooth on the box.
  double tensor_mean(const Radial& g, const std::array<Piece, kMaxDim>& pieces) const {
    using Rule = boost::math::quadrature::gauss<double, 10>;
    static const auto rule = [] {
      std::vector<std::pair<double, double>> nodes;  // on [0, 1]
      const auto& x = Rule::abscissa();
      const auto& w = Rule::weights();
      for (std::size_t i = 0; i < x.size(); ++i) {
        nodes.emplace_back(0.5 + 0.5 * x[i], 0.5 * w[i]);
        if (x[i] != 0.0) nodes.emplace_back(0.5 - 0.5 * x[i], 0.5 * w[i]);
      }
      return nodes;
    }();
    const int d = bm_.dim();
    std::array<std::size_t, kMaxDim> at{};
    double total = 0.0;
    while (true) {
      Point s;
      double weight = 1.0;
      for (int k = 0; k < d; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        const Piece& p = pieces[kk];
        const double len = p.hi - p.lo;
        s[kk] = p.lo + len * rule[at[kk]].first;
        weight *= len * rule[at[kk]].second * piece_weight(p, s[kk], width_[kk]);
      }
      total += weight * g(distance(s, Point{}));
      int k = 0;
      while (k < d && ++at[static_cast<std::size_t>(k)] == rule.size()) at[static_cast<std::size_t>(k++)] = 0;
      if (k == d) break;
    }
    return total;
  }

  // Mean of g(|x - y|) over x in one cell and y in the cell displaced by
  // off[a] widths along each axis. The difference x - y has the tent
  // density prod_a (h_a - |s_a - off_a h_a|)/h_a^2, split at the tent peaks.
  // Pieces touching the singularity at s = 0 are integrated by cones from
  // their corner nearest the origin, the others by Gauss-Legendre.
  double pair_mean(const Radial& g, const std::array<int, kMaxDim>& off) const {
    const int d = bm_.dim();
    double total = 0.0;
    for (int piece = 0; piece < (1 << d); ++piece) {
      std::array<Piece, kMaxDim> pieces{};
      bool skip = false, singular = true;
      for (int k = 0; k < d; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        const double h = width_[kk];
        const bool upper = (piece >> k) & 1;
        const double c = off[kk] * h;
        if (off[kk] == 0) {
          // Even tent about 0, folded onto [0, h].
          if (upper) skip = true;
          pieces[kk] = {0.0, h, Piece::folded};
        } else {
          pieces[kk] = upper ? Piece{c, c + h, Piece::falling} : Piece{c - h, c, Piece::rising};
        }
        if (pieces[kk].lo > 0.0) singular = false;
      }
      if (skip) continue;
      if (!singular) {
        total += tensor_mean(g, pieces);
        continue;
      }
      Box box;
      box.dim = d;
      for (int k = 0; k < d; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        box.lo[kk] = pieces[kk].lo;
        box.hi[kk] = pieces[kk].hi;
      }
      auto f = [&](const Point& s) {
        double w = g(distance(s, Point{}));
        for (int k = 0; k < d; ++k) {
          const auto kk = static_cast<std::size_t>(k);
          w *= piece_weight(pieces[kk], s[kk], width_[kk]);
        }
        return w;
      };
      Point corner;
      for (int k = 0; k < d; ++k) corner[static_cast<std::size_t>(k)] = box.lo[static_cast<std::size_t>(k)];
      total += quad::box_cone_integral(f, corner, box, 1e-10).value;
    }
    return total;
  }

  const KilledBrownianModel& bm_;
  Box region_;
  int cells_;
  Box cell_;
  std::array<double, kMaxDim> width_{};
  std::vector<Point> centers_;
  std::vector<std::array<int, kMaxDim>> index_;
  Vector weights_;
};

}  // namespace

std::unique_ptr<KernelGrid> make_grid(const FiniteChainModel& chain) {
  return std::make_unique<ChainGrid>(chain);
}

std::unique_ptr<KernelGrid> make_grid(const KilledBrownianModel& bm, const Box& region, int cells_per_axis) {
  return std::make_unique<BrownianGrid>(bm, region, cells_per_axis);
}

int default_cells_per_axis(int dim) {
  switch (dim) {
    case 1: return 400;
    case 2: return 40;
    default: return 12;
  }
}

Box bounding_support(const std::vector<TestFunction>& functions) {
  if (functions.empty()) throw Error(ErrorCode::InvalidArgument, "no functions");
  Box out = functions.front().support();
  for (const auto& f : functions) {
    const Box& s = f.support();
    if (s.dim != out.dim) throw Error(ErrorCode::InvalidArgument, "functions live in different dimensions");
    for (int i = 0; i < s.dim; ++i) {
      const auto k = static_cast<std::size_t>(i);
      out.lo[k] = std::min(out.lo[k], s.lo[k]);
      out.hi[k] = std::max(out.hi[k], s.hi[k]);
    }
  }
  return out;
}

}  // namespace loopkit
