#include <cmath>
#include <random>

#include "doctest.h"
#include "loopkit/errors.hpp"
#include "loopkit/loops.hpp"
#include "loopkit/moments.hpp"
#include "loopkit/permutations.hpp"
#include "test_support.hpp"

using namespace loopkit;
using loopkit::testing::asymmetric_three_state_chain;
using loopkit::testing::one_state_chain;
using loopkit::testing::random_chain;
using loopkit::testing::two_state_chain;

namespace {

Vector indicator(std::size_t s, std::size_t n) {
  Vector v = Vector::Zero(static_cast<Eigen::Index>(n));
  v[static_cast<Eigen::Index>(s)] = 1.0;
  return v;
}

bool well_formed(const LoopPath& p) {
  if (p.times.empty() || p.times.size() != p.states.size() || p.times[0] != 0.0) return false;
  for (std::size_t j = 1; j < p.times.size(); ++j) {
    if (!(p.times[j] > p.times[j - 1]) || p.states[j] == p.states[j - 1]) return false;
  }
  return p.lifetime > p.times.back() && p.states.front() == p.root;
}

// Pairs of segments, written out: sum_{i<j} g1(s_i) L_i g2(s_j) L_j plus the
// same-segment triangles g1 g2 L^2 / 2.
double two_point_simplex(const LoopPath& p, const Vector& g1, const Vector& g2) {
  double total = 0.0;
  for (std::size_t i = 0; i < p.segments(); ++i) {
    const double li = p.segment_end(i) - p.times[i];
    const auto si = static_cast<Eigen::Index>(p.states[i]);
    total += g1[si] * g2[si] * li * li / 2.0;
    for (std::size_t j = i + 1; j < p.segments(); ++j) {
      const auto sj = static_cast<Eigen::Index>(p.states[j]);
      total += g1[si] * li * g2[sj] * (p.segment_end(j) - p.times[j]);
    }
  }
  return total;
}

bool within(const Estimate& e, double truth, double k = 3.0) { return std::abs(e.mean - truth) <= k * e.std_error; }

}  // namespace

TEST_CASE("h-chain rates: killing only at the root, exit rates unchanged") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 6; ++trial) {
    const auto chain = random_chain(rng, 2 + static_cast<std::size_t>(trial % 4));
    const LoopSampler sampler(chain);
    const auto n = static_cast<Eigen::Index>(chain.size());
    for (std::size_t z = 0; z < chain.size(); ++z) {
      const auto zi = static_cast<Eigen::Index>(z);
      // (-G) u(., z) m(z) is the unit vector at z, so G h_z = -1_z / m(z)
      const Vector h = chain.green().col(zi);
      const Vector gh = chain.generator() * h;
      for (Eigen::Index x = 0; x < n; ++x) {
        CHECK(gh[x] == doctest::Approx(x == zi ? -1.0 / chain.m()[zi] : 0.0).epsilon(1e-12).scale(1.0));
      }
      const Matrix q = sampler.h_rates(z);
      const Vector kill = sampler.h_killing(z);
      for (Eigen::Index x = 0; x < n; ++x) {
        CHECK(q.row(x).sum() + kill[x] == doctest::Approx(chain.exit_rate(static_cast<std::size_t>(x))).epsilon(1e-12));
        CHECK(kill[x] == (x == zi ? doctest::Approx(-gh[x] / h[x]) : doctest::Approx(0.0)));
      }
    }
  }
}

TEST_CASE("one-state chain: loop lifetime is exponential with the killing rate") {
  const LoopSampler sampler(one_state_chain());
  Rng rng(7);
  double sum = 0.0, sum2 = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto p = sampler.sample_qzz(0, rng);
    REQUIRE(p.segments() == 1);
    sum += p.lifetime;
    sum2 += p.lifetime * p.lifetime;
  }
  const double mean = sum / n, se = std::sqrt((sum2 / n - mean * mean) / n);
  CHECK(std::abs(mean - 0.5) < 3.0 * se);
  CHECK(std::abs(sum2 / n - 0.5) < 0.02);  // E zeta^2 = 2 / 4
}

TEST_CASE("2-state chain: mean loop lifetime from a") {
  const LoopSampler sampler(two_state_chain());
  Rng rng(99);
  double sum = 0.0, sum2 = 0.0;
  const int n = 100000;
  bool ok = true;
  for (int i = 0; i < n; ++i) {
    const auto p = sampler.sample_qzz(0, rng);
    ok = ok && well_formed(p) && p.states.back() == 0;
    sum += p.lifetime;
    sum2 += p.lifetime * p.lifetime;
  }
  CHECK(ok);
  const double mean = sum / n, se = std::sqrt((sum2 / n - mean * mean) / n);
  CHECK(std::abs(mean - 5.0 / 6.0) < 3.0 * se);
}

TEST_CASE("sampled loops die only at their root") {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 4; ++trial) {
    const LoopSampler sampler(random_chain(gen, 3 + static_cast<std::size_t>(trial)));
    Rng rng(static_cast<std::uint64_t>(trial));
    for (int i = 0; i < 5000; ++i) {
      const auto loop = sampler.sample_mu(rng);
      REQUIRE(well_formed(loop.path));
      CHECK(loop.path.states.back() == loop.path.root);
      CHECK(loop.weight == doctest::Approx(loop.normalizer / loop.path.lifetime));
    }
  }
}

TEST_CASE("loop-measure estimator: 2-cycle on the 2-state chain") {
  const auto chain = two_state_chain();
  const LoopSampler sampler(chain);
  const std::vector<Vector> f{indicator(0, 2), indicator(1, 2)};
  McOptions opt{100000, 2024, 2};
  const auto r = estimate_functionals(
      sampler, LoopMeasure::mu,
      {[&](const LoopPath& p) { return occupation_product(p, f); }, [](const LoopPath&) { return 0.0; }}, opt);
  CHECK(within(r.estimates[0], 1.0 / 9.0));
  CHECK(r.estimates[1].mean == 0.0);
  CHECK(r.estimates[1].std_error == 0.0);
  CHECK(r.effective_sample_size > 0.0);
  CHECK(r.effective_sample_size < 100000.0);
}

TEST_CASE("companion-measure estimators agree with the moment engine") {
  const auto chain = two_state_chain();
  const LoopSampler sampler(chain);
  const Vector fa = indicator(0, 2);
  const double alpha = 1.0;
  const double nu = nu_moment(chain, {TestFunction::on_states(fa)}, alpha).value;
  McOptions opt{100000, 77, 2};
  auto functional = [&](const LoopPath& p) { return std::exp(-alpha * p.lifetime) * p.occupation(fa); };
  const auto by_nu = estimate_functionals(sampler, LoopMeasure::nu, {functional}, opt);
  CHECK(within(by_nu.estimates[0], nu));
  // mu-side: the lifetime cancels the 1 / zeta weight
  const auto by_mu = estimate_functionals(
      sampler, LoopMeasure::mu, {[&](const LoopPath& p) { return p.lifetime * functional(p); }}, opt);
  CHECK(within(by_mu.estimates[0], nu));
}

TEST_CASE("estimators are unbiased at oracle points across seeds") {
  std::mt19937_64 gen(41);
  for (std::size_t states : {3u, 4u}) {
    const auto chain = random_chain(gen, states);
    const LoopSampler sampler(chain);
    for (int k : {2, 3}) {
      std::vector<Vector> f;
      std::vector<TestFunction> tf;
      for (int j = 0; j < k; ++j) {
        f.push_back(indicator(static_cast<std::size_t>(j) % states, states));
        tf.push_back(TestFunction::on_states(f.back()));
      }
      const double truth = mu_moment(chain, tf).value;
      int hits = 0;
      for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto r = estimate_functionals(sampler, LoopMeasure::mu,
                                            {[&](const LoopPath& p) { return occupation_product(p, f); }},
                                            McOptions{100000, seed, 4});
        hits += within(r.estimates[0], truth) ? 1 : 0;
      }
      CHECK(hits >= 19);
    }
  }
}

TEST_CASE("Monte Carlo results depend only on the seed") {
  const LoopSampler sampler(asymmetric_three_state_chain());
  const std::vector<Vector> f{indicator(0, 3), indicator(2, 3)};
  auto fn = [&](const LoopPath& p) { return occupation_product(p, f); };
  const auto a = estimate_functionals(sampler, LoopMeasure::mu, {fn}, McOptions{20000, 5, 1});
  const auto b = estimate_functionals(sampler, LoopMeasure::mu, {fn}, McOptions{20000, 5, 4});
  const auto c = estimate_functionals(sampler, LoopMeasure::mu, {fn}, McOptions{20000, 6, 1});
  CHECK(a.estimates[0].mean == b.estimates[0].mean);
  CHECK(a.estimates[0].std_error == b.estimates[0].std_error);
  CHECK(a.estimates[0].mean != c.estimates[0].mean);
  Rng r1(stream_seed(5, 3)), r2(stream_seed(5, 3));
  for (int i = 0; i < 100; ++i) CHECK(r1() == r2());
  CHECK(stream_seed(5, 3) != stream_seed(5, 4));
}

TEST_CASE("rotation") {
  const auto chain = asymmetric_three_state_chain();
  const LoopSampler sampler(chain);
  Rng rng(12);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const LoopPath p = sampler.sample_nu(rng).path;
    const double zeta = p.lifetime;
    const LoopPath same = rotate(p, 0.0);
    CHECK(same.times == p.times);
    CHECK(same.states == p.states);
    const LoopPath wrapped = rotate(p, zeta);
    CHECK(wrapped.states == p.states);
    CHECK(wrapped.times == p.times);

    const double u = 3.0 * zeta * unit(rng);
    const LoopPath r = rotate(p, u);
    REQUIRE(r.times.size() == r.states.size());
    CHECK(r.lifetime == zeta);
    for (std::size_t j = 1; j < r.states.size(); ++j) CHECK(r.states[j] != r.states[j - 1]);
    const Vector before = p.occupation_by_state(3), after = r.occupation_by_state(3);
    CHECK((before - after).cwiseAbs().maxCoeff() <= 1e-12 * zeta);
    // rotation shifts the periodic extension
    for (double t : {0.0, 0.3 * zeta, 0.77 * zeta, 1.5 * zeta}) {
      const double s = std::fmod(t + u, zeta);
      // stay off jump times, where rounding decides the side
      bool near_jump = false;
      for (double tj : p.times) near_jump = near_jump || std::abs(tj - s) < 1e-9 * zeta;
      if (near_jump) continue;
      CHECK(periodic_eval(r, t) == periodic_eval(p, t + u));
    }
  }
  LoopPath forever = sampler.sample_nu(rng).path;
  forever.lifetime = kInfinity;
  CHECK_THROWS_AS(rotate(forever, 1.0), Error);
}

TEST_CASE("periodic extension") {
  LoopPath p;
  p.root = 0;
  p.times = {0.0, 1.0, 1.5};
  p.states = {0, 1, 0};
  p.lifetime = 2.0;
  CHECK(periodic_eval(p, 0.5) == 0);
  CHECK(periodic_eval(p, 1.2) == 1);
  CHECK(periodic_eval(p, 2.0) == 0);
  CHECK(periodic_eval(p, 2.0 * 2.5) == *p.state_at(1.0));
  CHECK(periodic_eval(p, 3.25) == 1);
  CHECK_FALSE(p.state_at(2.0).has_value());
}

TEST_CASE("periodic Laplace occupation identity") {
  LoopPath single;
  single.times = {0.0};
  single.states = {0};
  single.lifetime = 1.3;
  const auto zero = occupation_laplace(single, Vector::Zero(1), 0.7);
  CHECK(zero.plain == 0.0);
  CHECK(zero.periodic == 0.0);
  const auto one = occupation_laplace(single, Vector::Ones(1), 0.7);
  CHECK(one.plain == doctest::Approx((1.0 - std::exp(-0.7 * 1.3)) / 0.7).epsilon(1e-15));
  CHECK(one.periodic == doctest::Approx(1.0 / 0.7).epsilon(1e-15));

  const LoopSampler sampler(two_state_chain());
  Rng rng(4);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const LoopPath p = sampler.sample_nu(rng).path;
    for (double alpha : {0.1, 1.0, 5.0}) {
      const auto r = occupation_laplace(p, Vector::LinSpaced(2, 0.5, 2.0), alpha);
      CHECK(r.tail_bound <= 1e-15 * r.periodic);
      worst = std::max(worst, std::abs(r.periodic - r.periodic_direct) / r.periodic);
    }
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("simplex integrals against a direct segment-pair sum") {
  const LoopSampler sampler(asymmetric_three_state_chain());
  Rng rng(8);
  const Vector g1 = Vector::LinSpaced(3, 0.2, 1.0), g2 = Vector::LinSpaced(3, 1.5, -0.5);
  for (int i = 0; i < 300; ++i) {
    const LoopPath p = sampler.sample_nu(rng).path;
    const double direct = two_point_simplex(p, g1, g2);
    CHECK(simplex_integral(p, {g1, g2}) == doctest::Approx(direct).epsilon(1e-12).scale(1e-3));
    const double occ = p.occupation(g1);
    CHECK(simplex_integral(p, {g1, g1, g1}) == doctest::Approx(occ * occ * occ / 6.0).epsilon(1e-12).scale(1e-3));
  }
}

TEST_CASE("product of occupation times splits into cyclic classes of multiple integrals") {
  const LoopSampler sampler(asymmetric_three_state_chain());
  Rng rng(10);
  std::vector<Vector> f{Vector::LinSpaced(3, 0.2, 1.0), Vector::LinSpaced(3, 1.5, 0.1), Vector::Constant(3, 0.6),
                        Vector::LinSpaced(3, 0.9, 0.3)};
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const LoopPath p = sampler.sample_nu(rng).path;
    for (int k = 2; k <= 4; ++k) {
      const std::vector<Vector> fk(f.begin(), f.begin() + k);
      double sum = 0.0;
      for (const auto& perm : enumerate_regime(Regime::cyclic_classes, k)) {
        std::vector<Vector> ordered;
        for (int j : perm) ordered.push_back(fk[static_cast<std::size_t>(j)]);
        sum += multiple_integral(p, ordered);
      }
      const double product = occupation_product(p, fk);
      worst = std::max(worst, std::abs(sum - product) / std::max(product, 1e-300));
    }
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("invariance test") {
  const auto chain = asymmetric_three_state_chain();
  const LoopSampler sampler(chain);
  InvarianceConfig config;
  config.functions = {indicator(0, 3)};
  config.times = {0.3};
  config.mc = McOptions{100000, 42, 4};

  config.shift = 0.0;
  const auto still = invariance_test(sampler, config);
  CHECK(still.difference.mean == 0.0);
  CHECK(still.z_score == 0.0);
  CHECK(still.pass);
  CHECK(within(still.unshifted, still.analytic_unshifted));

  config.shift = 0.5;
  const auto moved = invariance_test(sampler, config);
  CHECK(moved.pass);
  CHECK(within(moved.shifted, moved.analytic_unshifted));

  // A single time cannot see a wrong period: given the lifetime the root has
  // the law of X_s for every s. Two nearby times can.
  config.broken_rotation = true;
  CHECK(invariance_test(sampler, config).pass);
  const LoopSampler fast(loopkit::testing::fast_asymmetric_chain());
  InvarianceConfig pair;
  pair.functions = {indicator(0, 3), indicator(0, 3)};
  pair.times = {0.05, 0.15};
  pair.shift = 1.0;
  pair.mc = McOptions{100000, 42, 4};
  const auto honest = invariance_test(fast, pair);
  CHECK(honest.pass);
  CHECK(within(honest.unshifted, honest.analytic_unshifted));
  pair.broken_rotation = true;
  const auto broken = invariance_test(fast, pair);
  CHECK_FALSE(broken.pass);
  CHECK(std::abs(broken.z_score) > 5.0);

  config.broken_rotation = false;
  config.mc.samples = 500;
  CHECK_THROWS_AS(invariance_test(sampler, config), Error);
  config.mc.samples = 10000;
  config.times = {500.0};
  try {
    invariance_test(sampler, config);
    FAIL("expected InsufficientEffectiveSampleSize");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientEffectiveSampleSize);
  }
}

TEST_CASE("time moment at time zero is the diagonal sum") {
  const auto chain = asymmetric_three_state_chain();
  const Vector f = Vector::LinSpaced(3, 1.0, 2.0);
  double expected = 0.0;
  for (Eigen::Index z = 0; z < 3; ++z) expected += chain.m()[z] * f[z] * chain.green()(z, z);
  CHECK(nu_time_moment(chain, {f}, {0.0}) == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("loop soup") {
  const LoopSampler sampler(two_state_chain());
  Rng rng(5);
  CHECK(loop_soup(sampler, 0.0, 0.1, rng, 1000).loops.empty());
  CHECK_THROWS_AS(loop_soup(sampler, 1.0, 0.0, rng, 1000), Error);

  const double intensity = 40.0, zeta_min = 0.5;
  const auto first = loop_soup(sampler, intensity, zeta_min, rng, 100000);
  CHECK(first.mass > 0.0);
  double count = 0.0;
  const int soups = 400;
  bool all_long = true;
  for (int i = 0; i < soups; ++i) {
    const auto soup = loop_soup(sampler, intensity, zeta_min, rng, 2000);
    count += static_cast<double>(soup.loops.size());
    for (const auto& l : soup.loops) all_long = all_long && l.path.lifetime > zeta_min;
  }
  CHECK(all_long);
  const double expected = intensity * first.mass;
  // Poisson spread plus the spread of each soup's own mass estimate
  const double se = std::sqrt(expected / soups + std::pow(intensity * first.mass_error, 2) * 50.0 / soups);
  CHECK(std::abs(count / soups - expected) < 3.0 * se + 3.0 * intensity * first.mass_error);
}
