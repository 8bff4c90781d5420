#include "loopkit/loops.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "loopkit/errors.hpp"

namespace loopkit {
namespace {

constexpr std::size_t kChunk = 4096;
constexpr double kBrokenGap = 0.1;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Neumaier-compensated running sum.
struct CompensatedSum {
  double sum = 0.0, carry = 0.0;
  void add(double v) {
    const double t = sum + v;
    carry += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  double value() const { return sum + carry; }
};

double wrap(double t, double period) {
  double s = t - std::floor(t / period) * period;
  if (s >= period || s < 0.0) s = 0.0;
  return s;
}

void require_finite_lifetime(const LoopPath& path) {
  if (!std::isfinite(path.lifetime)) throw Error(ErrorCode::InfiniteLifetime, "path never dies");
}

std::size_t segment_index(const LoopPath& path, double t) {
  const auto it = std::upper_bound(path.times.begin(), path.times.end(), t);
  return static_cast<std::size_t>(it - path.times.begin()) - 1;
}

// Running moments of one chunk, merged in chunk order.
struct Moments {
  std::size_t n = 0;
  std::vector<double> mean, m2;
  double sum_w = 0.0, sum_w2 = 0.0;

  explicit Moments(std::size_t k = 0) : mean(k, 0.0), m2(k, 0.0) {}

  void merge(const Moments& o) {
    if (o.n == 0) return;
    const double na = static_cast<double>(n), nb = static_cast<double>(o.n), nt = na + nb;
    for (std::size_t i = 0; i < mean.size(); ++i) {
      const double delta = o.mean[i] - mean[i];
      mean[i] += delta * nb / nt;
      m2[i] += o.m2[i] + delta * delta * na * nb / nt;
    }
    n += o.n;
    sum_w += o.sum_w;
    sum_w2 += o.sum_w2;
  }
};

}  // namespace

double uniform_open(Rng& rng) { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; }

std::uint64_t stream_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(master + (stream + 1) * 0x9E3779B97F4A7C15ULL);
}

// --- paths ----------------------------------------------------------------------

std::optional<std::size_t> LoopPath::state_at(double t) const {
  if (t < 0.0 || t >= lifetime) return std::nullopt;
  return states[segment_index(*this, t)];
}

double LoopPath::occupation(const Vector& f) const {
  CompensatedSum total;
  for (std::size_t j = 0; j < states.size(); ++j) {
    total.add(f[static_cast<Eigen::Index>(states[j])] * (segment_end(j) - times[j]));
  }
  return total.value();
}

Vector LoopPath::occupation_by_state(std::size_t num_states) const {
  Vector out = Vector::Zero(static_cast<Eigen::Index>(num_states));
  for (std::size_t j = 0; j < states.size(); ++j) {
    out[static_cast<Eigen::Index>(states[j])] += segment_end(j) - times[j];
  }
  return out;
}

// --- sampler --------------------------------------------------------------------

LoopSampler::LoopSampler(FiniteChainModel chain) : chain_(std::move(chain)) {
  const std::size_t n = chain_.size();
  const Matrix& u = chain_.green();
  const Vector& m = chain_.m();
  auto index = [](std::size_t i) { return static_cast<Eigen::Index>(i); };

  raw_tables_.resize(n);
  for (std::size_t x = 0; x < n; ++x) {
    Table& t = raw_tables_[x];
    double acc = 0.0;
    for (std::size_t y = 0; y < n; ++y) {
      if (y == x || chain_.rate(x, y) <= 0.0) continue;
      acc += chain_.rate(x, y);
      t.targets.push_back(y);
      t.cumulative.push_back(acc);
    }
    acc += std::max(0.0, chain_.kill(x));
    t.cumulative.push_back(acc);
    t.total = acc;
  }

  h_tables_.assign(n, std::vector<Table>(n));
  for (std::size_t z = 0; z < n; ++z) {
    const double uzz = u(index(z), index(z));
    if (!std::isfinite(uzz)) throw Error(ErrorCode::NonFiniteDiagonal, "u(z, z) is not finite");
    for (std::size_t x = 0; x < n; ++x) {
      const double hx = u(index(x), index(z));
      if (hx <= 0.0) continue;
      Table& t = h_tables_[z][x];
      double acc = 0.0;
      for (std::size_t y = 0; y < n; ++y) {
        const double rate = y == x ? 0.0 : chain_.rate(x, y) * u(index(y), index(z)) / hx;
        if (rate <= 0.0) continue;
        acc += rate;
        t.targets.push_back(y);
        t.cumulative.push_back(acc);
      }
      if (x == z) acc += 1.0 / (m[index(z)] * uzz);
      t.cumulative.push_back(acc);
      t.total = acc;
    }
    normalizer_ += m[index(z)] * uzz;
    root_cumulative_.push_back(normalizer_);
  }
}

Matrix LoopSampler::h_rates(std::size_t z) const {
  const auto n = static_cast<Eigen::Index>(chain_.size());
  Matrix out = Matrix::Zero(n, n);
  for (std::size_t x = 0; x < chain_.size(); ++x) {
    const Table& t = h_tables_.at(z)[x];
    double prev = 0.0;
    for (std::size_t i = 0; i < t.targets.size(); ++i) {
      out(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(t.targets[i])) = t.cumulative[i] - prev;
      prev = t.cumulative[i];
    }
  }
  return out;
}

Vector LoopSampler::h_killing(std::size_t z) const {
  Vector out = Vector::Zero(static_cast<Eigen::Index>(chain_.size()));
  const auto zi = static_cast<Eigen::Index>(z);
  out[zi] = 1.0 / (chain_.m()[zi] * chain_.green()(zi, zi));
  return out;
}

LoopPath LoopSampler::run(const std::vector<Table>& tables, std::size_t start, Rng& rng) const {
  LoopPath path;
  path.root = start;
  double t = 0.0;
  std::size_t x = start;
  while (true) {
    path.times.push_back(t);
    path.states.push_back(x);
    const Table& table = tables[x];
    t += -std::log(uniform_open(rng)) / table.total;
    const double v = uniform_open(rng) * table.total;
    const auto pick = static_cast<std::size_t>(
        std::upper_bound(table.cumulative.begin(), table.cumulative.end(), v) - table.cumulative.begin());
    if (pick >= table.targets.size()) {
      path.lifetime = t;
      return path;
    }
    x = table.targets[pick];
  }
}

LoopPath LoopSampler::sample_qzz(std::size_t z, Rng& rng) const {
  if (z >= chain_.size()) throw Error(ErrorCode::OutOfDomain, "root index out of range");
  return run(h_tables_[z], z, rng);
}

LoopPath LoopSampler::sample_path(std::size_t x, Rng& rng) const {
  if (x >= chain_.size()) throw Error(ErrorCode::OutOfDomain, "start index out of range");
  return run(raw_tables_, x, rng);
}

std::size_t LoopSampler::draw_root(Rng& rng) const {
  const double v = uniform_open(rng) * normalizer_;
  const auto it = std::upper_bound(root_cumulative_.begin(), root_cumulative_.end(), v);
  return std::min(static_cast<std::size_t>(it - root_cumulative_.begin()), chain_.size() - 1);
}

WeightedLoop LoopSampler::sample_mu(Rng& rng) const {
  WeightedLoop out = sample_nu(rng);
  out.weight = normalizer_ / out.path.lifetime;
  return out;
}

WeightedLoop LoopSampler::sample_nu(Rng& rng) const {
  WeightedLoop out;
  out.path = sample_qzz(draw_root(rng), rng);
  out.weight = normalizer_;
  out.normalizer = normalizer_;
  return out;
}

LoopPath sample_qzz(const FiniteChainModel& chain, std::size_t z, Rng& rng) {
  return LoopSampler(chain).sample_qzz(z, rng);
}

WeightedLoop sample_mu(const FiniteChainModel& chain, Rng& rng) { return LoopSampler(chain).sample_mu(rng); }

// --- rotation and periodic extension ------------------------------------------------

LoopPath rotate(const LoopPath& path, double u) {
  require_finite_lifetime(path);
  if (!(u >= 0.0)) throw Error(ErrorCode::OutOfDomain, "rotation must be >= 0");
  const double zeta = path.lifetime;
  const double s = wrap(u, zeta);
  if (s == 0.0) return path;
  const std::size_t j = segment_index(path, s);
  LoopPath out;
  out.lifetime = zeta;
  auto push = [&](double t, std::size_t state) {
    if (!out.states.empty() && out.states.back() == state) return;
    out.times.push_back(t);
    out.states.push_back(state);
  };
  push(0.0, path.states[j]);
  for (std::size_t i = j + 1; i < path.states.size(); ++i) push(path.times[i] - s, path.states[i]);
  for (std::size_t i = 0; i <= j; ++i) {
    if (i == j && path.times[j] >= s) break;
    push(zeta - s + path.times[i], path.states[i]);
  }
  out.root = out.states.front();
  return out;
}

std::size_t periodic_eval(const LoopPath& path, double t) {
  require_finite_lifetime(path);
  if (!(t >= 0.0)) throw Error(ErrorCode::OutOfDomain, "t must be >= 0");
  return path.states[segment_index(path, wrap(t, path.lifetime))];
}

namespace {

// Periodic extension with period lifetime + kBrokenGap; the gap is spent in
// the state the loop dies from.
std::size_t broken_periodic_eval(const LoopPath& path, double t) {
  const double s = wrap(t, path.lifetime + kBrokenGap);
  if (s >= path.lifetime) return path.states.back();
  return path.states[segment_index(path, s)];
}

}  // namespace

OccupationLaplace occupation_laplace(const LoopPath& path, const Vector& f, double alpha) {
  require_finite_lifetime(path);
  if (!(alpha > 0.0)) throw Error(ErrorCode::OutOfDomain, "alpha must be positive");
  OccupationLaplace out;
  const double zeta = path.lifetime;
  double sup = 0.0;
  // int over segment j of e^{-alpha t}, shifted by `offset`
  auto segment = [&](std::size_t j, double offset) {
    const double len = path.segment_end(j) - path.times[j];
    return std::exp(-alpha * (offset + path.times[j])) * -std::expm1(-alpha * len) / alpha;
  };
  CompensatedSum plain;
  for (std::size_t j = 0; j < path.segments(); ++j) {
    const double fj = f[static_cast<Eigen::Index>(path.states[j])];
    sup = std::max(sup, std::abs(fj));
    plain.add(fj * segment(j, 0.0));
  }
  out.plain = plain.value();
  out.periodic = out.plain / -std::expm1(-alpha * zeta);
  if (sup == 0.0) return out;

  const long budget = 20'000'000;
  const long max_periods = std::max<long>(1000, budget / static_cast<long>(path.segments()));
  CompensatedSum direct;
  long q = 0;
  for (; q < max_periods; ++q) {
    const double offset = static_cast<double>(q) * zeta;
    const double tail = sup * std::exp(-alpha * offset) / alpha;
    if (tail <= 1e-18 * std::abs(direct.value()) && q > 0) break;
    for (std::size_t j = 0; j < path.segments(); ++j) {
      direct.add(f[static_cast<Eigen::Index>(path.states[j])] * segment(j, offset));
    }
  }
  out.periods = q;
  out.tail_bound = sup * std::exp(-alpha * static_cast<double>(q) * zeta) / alpha;
  out.periodic_direct = direct.value();
  return out;
}

// --- pathwise multiple integrals ------------------------------------------------------

double simplex_integral(const LoopPath& path, const std::vector<Vector>& g) {
  const std::size_t k = g.size();
  // a[j]: integral over r_1 < ... < r_j < (current time)
  std::vector<double> a(k + 1, 0.0), next(k + 1, 0.0), vals(k + 1, 0.0);
  a[0] = 1.0;
  for (std::size_t s = 0; s < path.segments(); ++s) {
    const double len = path.segment_end(s) - path.times[s];
    const auto state = static_cast<Eigen::Index>(path.states[s]);
    for (std::size_t j = 1; j <= k; ++j) vals[j] = g[j - 1][state];
    for (std::size_t j = 1; j <= k; ++j) {
      // the last j - i points fall in this segment: volume len^(j-i)/(j-i)!
      double acc = a[j];
      double coef = 1.0;
      for (std::size_t i = j; i-- > 0;) {
        coef *= vals[i + 1] * len / static_cast<double>(j - i);
        acc += a[i] * coef;
      }
      next[j] = acc;
    }
    for (std::size_t j = 1; j <= k; ++j) a[j] = next[j];
  }
  return a[k];
}

double multiple_integral(const LoopPath& path, const std::vector<Vector>& f) {
  const std::size_t k = f.size();
  double total = 0.0;
  std::vector<Vector> shifted(k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) shifted[j] = f[(j + i) % k];
    total += simplex_integral(path, shifted);
  }
  return total;
}

double occupation_product(const LoopPath& path, const std::vector<Vector>& f) {
  double p = 1.0;
  for (const auto& fj : f) p *= path.occupation(fj);
  return p;
}

// --- Monte Carlo ------------------------------------------------------------------------

McResult estimate_functionals(const LoopSampler& sampler, LoopMeasure measure,
                              const std::vector<LoopFunctional>& functionals, const McOptions& options) {
  if (options.samples == 0) throw Error(ErrorCode::InvalidArgument, "need at least one sample");
  const std::size_t k = functionals.size();
  const std::size_t chunks = (options.samples + kChunk - 1) / kChunk;
  std::vector<Moments> parts(chunks, Moments(k));
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    std::vector<double> values(k);
    for (std::size_t c = next++; c < chunks; c = next++) {
      Rng rng(stream_seed(options.seed, c));
      Moments& acc = parts[c];
      const std::size_t count = std::min(kChunk, options.samples - c * kChunk);
      for (std::size_t i = 0; i < count; ++i) {
        const WeightedLoop loop = measure == LoopMeasure::mu ? sampler.sample_mu(rng) : sampler.sample_nu(rng);
        acc.sum_w += loop.weight;
        acc.sum_w2 += loop.weight * loop.weight;
        ++acc.n;
        const double nn = static_cast<double>(acc.n);
        for (std::size_t f = 0; f < k; ++f) {
          const double v = loop.weight * functionals[f](loop.path);
          const double delta = v - acc.mean[f];
          acc.mean[f] += delta / nn;
          acc.m2[f] += delta * (v - acc.mean[f]);
        }
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(chunks)));
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  Moments total(k);
  for (const auto& p : parts) total.merge(p);
  McResult result;
  const double n = static_cast<double>(total.n);
  for (std::size_t f = 0; f < k; ++f) {
    const double var = total.n > 1 ? total.m2[f] / (n - 1.0) : 0.0;
    result.estimates.push_back({total.mean[f], std::sqrt(var / n), total.n});
  }
  result.effective_sample_size = total.sum_w2 > 0.0 ? total.sum_w * total.sum_w / total.sum_w2 : 0.0;
  return result;
}

double nu_time_moment(const FiniteChainModel& chain, const std::vector<Vector>& functions,
                      const std::vector<double>& times) {
  if (functions.size() != times.size() || functions.empty()) {
    throw Error(ErrorCode::InvalidArgument, "need one time per function");
  }
  const auto n = static_cast<Eigen::Index>(chain.size());
  Matrix acc = Matrix::Identity(n, n);
  double prev = 0.0;
  for (std::size_t j = 0; j < times.size(); ++j) {
    if (times[j] < prev) throw Error(ErrorCode::InvalidArgument, "times must be nondecreasing and >= 0");
    acc = acc * chain.transition(times[j] - prev) * functions[j].asDiagonal();
    prev = times[j];
  }
  return (chain.m().asDiagonal() * acc * chain.green()).trace();
}

InvarianceReport invariance_test(const LoopSampler& sampler, const InvarianceConfig& config) {
  const std::size_t k = config.functions.size();
  if (k == 0 || config.times.size() != k) throw Error(ErrorCode::InvalidArgument, "need one time per function");
  for (std::size_t j = 0; j < k; ++j) {
    if (!(config.times[j] >= 0.0) || (j > 0 && config.times[j] < config.times[j - 1])) {
      throw Error(ErrorCode::InvalidArgument, "times must be nondecreasing and >= 0");
    }
  }
  if (!(config.times.back() > 0.0)) throw Error(ErrorCode::InvalidArgument, "t_k must be positive");
  if (!(config.shift >= 0.0)) throw Error(ErrorCode::InvalidArgument, "shift must be >= 0");
  if (config.mc.samples < 1000) throw Error(ErrorCode::InvalidArgument, "need at least 1000 samples");

  const double tk = config.times.back();
  auto functional = [&](double r) {
    return [&, r](const LoopPath& path) {
      if (!(tk < path.lifetime)) return 0.0;
      double p = 1.0;
      for (std::size_t j = 0; j < k; ++j) {
        const double t = config.times[j] + r;
        const std::size_t x = config.broken_rotation && r > 0.0 ? broken_periodic_eval(path, t) : periodic_eval(path, t);
        p *= config.functions[j][static_cast<Eigen::Index>(x)];
      }
      return p;
    };
  };
  const LoopFunctional shifted = functional(config.shift), unshifted = functional(0.0);
  const std::vector<LoopFunctional> fs{
      shifted, unshifted, [&](const LoopPath& p) { return shifted(p) - unshifted(p); },
      [&](const LoopPath& p) { return tk < p.lifetime ? 1.0 : 0.0; }};
  const McResult mc = estimate_functionals(sampler, LoopMeasure::nu, fs, config.mc);

  InvarianceReport report;
  report.shifted = mc.estimates[0];
  report.unshifted = mc.estimates[1];
  report.difference = mc.estimates[2];
  const double survivors = mc.estimates[3].mean / sampler.normalizer() * static_cast<double>(config.mc.samples);
  report.effective_sample_size = std::round(survivors);
  if (report.effective_sample_size < 100.0) {
    throw Error(ErrorCode::InsufficientEffectiveSampleSize,
                "only " + std::to_string(static_cast<long>(report.effective_sample_size)) + " loops outlive t_k");
  }
  const double se = report.difference.std_error;
  if (se > 0.0) {
    report.z_score = report.difference.mean / se;
  } else {
    report.z_score = report.difference.mean == 0.0 ? 0.0 : kInfinity;
  }
  report.pass = std::abs(report.z_score) < config.threshold;
  report.analytic_unshifted = nu_time_moment(sampler.chain(), config.functions, config.times);
  return report;
}

LoopSoup loop_soup(const LoopSampler& sampler, double intensity, double zeta_min, Rng& rng,
                   std::size_t mass_samples) {
  if (!(zeta_min > 0.0)) throw Error(ErrorCode::OutOfDomain, "zeta_min must be positive");
  if (!(intensity >= 0.0)) throw Error(ErrorCode::InvalidArgument, "intensity must be >= 0");
  LoopSoup soup;
  const McOptions options{mass_samples, rng(), 1};
  const auto mass = estimate_functionals(sampler, LoopMeasure::mu,
                                         {[&](const LoopPath& p) { return p.lifetime > zeta_min ? 1.0 : 0.0; }},
                                         options);
  soup.mass = mass.estimates[0].mean;
  soup.mass_error = mass.estimates[0].std_error;
  if (intensity == 0.0 || soup.mass == 0.0) return soup;
  std::poisson_distribution<long> count(intensity * soup.mass);
  const long wanted = count(rng);
  while (static_cast<long>(soup.loops.size()) < wanted) {
    // mu restricted to lifetime > zeta_min has density zeta_min / lifetime
    // against nu-draws, up to a constant; accept with that probability.
    WeightedLoop loop = sampler.sample_nu(rng);
    if (loop.path.lifetime <= zeta_min) continue;
    if (uniform_open(rng) >= zeta_min / loop.path.lifetime) continue;
    loop.weight = 1.0;
    soup.loops.push_back(std::move(loop));
  }
  return soup;
}

}  // namespace loopkit
