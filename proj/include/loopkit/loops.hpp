#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "loopkit/model.hpp"

namespace loopkit {

using Rng = std::mt19937_64;

/// Uniform on the open interval (0, 1) from the top 53 bits of one draw.
double uniform_open(Rng& rng);

/// Seed of worker stream `stream`: splitmix64(master + (stream + 1) * golden),
/// golden = 0x9E3779B97F4A7C15. Chunk c of a Monte Carlo run uses stream c.
std::uint64_t stream_seed(std::uint64_t master, std::uint64_t stream);

// Right-continuous piecewise-constant path of a finite chain. X_t = states[j]
// on [times[j], times[j+1]) with times.back() < lifetime, and X_t is the
// cemetery from `lifetime` on. Loops start and end at `root`.
struct LoopPath {
  std::size_t root = 0;
  std::vector<double> times;
  std::vector<std::size_t> states;
  double lifetime = 0.0;

  std::size_t segments() const { return states.size(); }
  double segment_end(std::size_t j) const { return j + 1 < times.size() ? times[j + 1] : lifetime; }
  // nullopt once the path is dead.
  std::optional<std::size_t> state_at(double t) const;
  // int_0^lifetime f(X_t) dt
  double occupation(const Vector& f) const;
  // Time spent in each state.
  Vector occupation_by_state(std::size_t num_states) const;
};

struct WeightedLoop {
  LoopPath path;
  // Z / lifetime for loop-measure draws, Z for companion-measure draws.
  double weight = 0.0;
  // Z = sum_w m(w) u(w, w), the root-sampling normaliser.
  double normalizer = 0.0;
};

// Exact samplers for a finite chain. Loops rooted at z follow the h-transform
// by h_z = u(., z): jump rates q(x, y) u(y, z) / u(x, z) and a killing rate
// 1 / (m(z) u(z, z)) that acts only at z. Thread-safe after construction.
class LoopSampler {
 public:
  explicit LoopSampler(FiniteChainModel chain);

  const FiniteChainModel& chain() const { return chain_; }
  double normalizer() const { return normalizer_; }

  // Jump rates of the h-chain rooted at z (zero diagonal) and its killing rates.
  Matrix h_rates(std::size_t z) const;
  Vector h_killing(std::size_t z) const;

  LoopPath sample_qzz(std::size_t z, Rng& rng) const;
  // Root drawn with probability m(z) u(z, z) / Z.
  WeightedLoop sample_mu(Rng& rng) const;
  WeightedLoop sample_nu(Rng& rng) const;
  // The untransformed chain from x until it is killed.
  LoopPath sample_path(std::size_t x, Rng& rng) const;

 private:
  struct Table {
    std::vector<double> cumulative;  // over targets, then death
    std::vector<std::size_t> targets;
    double total = 0.0;
  };
  LoopPath run(const std::vector<Table>& tables, std::size_t start, Rng& rng) const;
  std::size_t draw_root(Rng& rng) const;

  FiniteChainModel chain_;
  std::vector<std::vector<Table>> h_tables_;  // per root, per state
  std::vector<Table> raw_tables_;
  std::vector<double> root_cumulative_;
  double normalizer_ = 0.0;
};

LoopPath sample_qzz(const FiniteChainModel& chain, std::size_t z, Rng& rng);
WeightedLoop sample_mu(const FiniteChainModel& chain, Rng& rng);

/// Time origin moved to u mod lifetime; segments that meet at the seam are
/// merged. InfiniteLifetime when the path never dies.
LoopPath rotate(const LoopPath& path, double u);

/// X_{t mod lifetime} of the periodic extension.
std::size_t periodic_eval(const LoopPath& path, double t);

struct OccupationLaplace {
  double plain = 0.0;            // int_0^inf e^{-at} f(X_t) dt
  double periodic = 0.0;         // plain / (1 - e^{-a lifetime})
  double periodic_direct = 0.0;  // period-by-period sum over the periodic extension
  double tail_bound = 0.0;       // bound on the periods left out of the direct sum
  long periods = 0;
};

/// Both Laplace occupation integrals, each segment integrated in closed form.
OccupationLaplace occupation_laplace(const LoopPath& path, const Vector& f, double alpha);

/// int_{0 < r_1 < ... < r_k < lifetime} prod_j g_j(X_{r_j}) dr, exact.
double simplex_integral(const LoopPath& path, const std::vector<Vector>& g);

/// Simplex integrals summed over the k cyclic translations of (f_1..f_k).
double multiple_integral(const LoopPath& path, const std::vector<Vector>& f);

/// prod_j int f_j(X_t) dt
double occupation_product(const LoopPath& path, const std::vector<Vector>& f);

// --- Monte Carlo --------------------------------------------------------------

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

enum class LoopMeasure { mu, nu };

using LoopFunctional = std::function<double(const LoopPath&)>;

struct McOptions {
  std::size_t samples = 100000;
  std::uint64_t seed = 42;
  unsigned threads = 1;
};

struct McResult {
  // One per functional, all computed on the same loops.
  std::vector<Estimate> estimates;
  // (sum w)^2 / sum w^2 of the importance weights.
  double effective_sample_size = 0.0;
};

/// Estimates weight * F over loops drawn from mu or nu. Loops are drawn in
/// chunks of 4096, chunk c from stream_seed(seed, c), and reduced in chunk
/// order, so results do not depend on the thread count.
McResult estimate_functionals(const LoopSampler& sampler, LoopMeasure measure,
                              const std::vector<LoopFunctional>& functionals, const McOptions& options);

struct InvarianceConfig {
  std::vector<Vector> functions;
  std::vector<double> times;  // 0 < t_1 < ... < t_k
  double shift = 0.0;         // r
  double threshold = 3.0;
  // Mutant for power checks: periodic extension with period lifetime + 0.1,
  // the extra time spent at the root.
  bool broken_rotation = false;
  McOptions mc;
};

struct InvarianceReport {
  Estimate shifted;     // nu(prod f_j(Xbar_{t_j + r}) 1{t_k < lifetime})
  Estimate unshifted;   // nu(prod f_j(Xbar_{t_j}) 1{t_k < lifetime})
  Estimate difference;  // paired
  double z_score = 0.0;
  bool pass = false;
  double analytic_unshifted = 0.0;
  double effective_sample_size = 0.0;
};

/// Paired test of nu-rotation invariance on loops that outlive t_k.
/// InsufficientEffectiveSampleSize when fewer than 100 loops outlive t_k.
InvarianceReport invariance_test(const LoopSampler& sampler, const InvarianceConfig& config);

/// nu(prod_j f_j(X_{t_j}) 1{t_k < lifetime}) from the transition matrices.
double nu_time_moment(const FiniteChainModel& chain, const std::vector<Vector>& functions,
                      const std::vector<double>& times);

struct LoopSoup {
  std::vector<WeightedLoop> loops;
  // Estimate of mu(lifetime > zeta_min) and its standard error.
  double mass = 0.0;
  double mass_error = 0.0;
};

/// Poisson(intensity * mu(lifetime > zeta_min)) loops drawn from mu restricted
/// to lifetime > zeta_min. The mass is estimated from `mass_samples` draws.
LoopSoup loop_soup(const LoopSampler& sampler, double intensity, double zeta_min, Rng& rng,
                   std::size_t mass_samples = 100000);

}  // namespace loopkit
