// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "loopkit/assumptions.hpp"
#include "loopkit/errors.hpp"
#include "loopkit/io.hpp"
#include "loopkit/loops.hpp"
#include "loopkit/moments.hpp"
#include "loopkit/revuz.hpp"
#include "loopkit/subordination.hpp"
#include "test_support.hpp"

using namespace loopkit;
using testing::asymmetric_three_state_chain;
using testing::fast_asymmetric_chain;
using testing::random_chain;
using testing::two_state_chain;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

unsigned workers() { return std::max(1u, std::min(8u, std::thread::hardware_concurrency())); }

Vector indicator(std::size_t s, std::size_t n) {
  Vector v = Vector::Zero(static_cast<Eigen::Index>(n));
  v[static_cast<Eigen::Index>(s)] = 1.0;
  return v;
}

Vector random_vector(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  Vector v(static_cast<Eigen::Index>(n));
  for (auto& x : v) x = d(rng);
  return v;
}

// 1. resolvent identity
Outcome resolvent_identity() {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> rate(0.0, 3.0);
  std::vector<std::pair<double, double>> ab{{0.0, 1.0}};
  while (ab.size() < 10) ab.emplace_back(rate(rng), rate(rng));
  double chain_worst = 0.0, bm_worst = 0.0;
  for (int c = 0; c < 5; ++c) {
    const auto chain = random_chain(rng, 2 + static_cast<std::size_t>(c));
    std::vector<IndexPair> pairs;
    for (std::size_t x = 0; x < chain.size(); ++x) {
      for (std::size_t y = 0; y < chain.size(); ++y) {
        if (x != y) pairs.emplace_back(x, y);
      }
    }
    for (auto [a, b] : ab) chain_worst = std::max(chain_worst, check_resolvent(chain, a, b, pairs, 1e-10).value);
  }
  for (int d = 1; d <= 3; ++d) {
    const KilledBrownianModel bm(d, 0.5);
    std::vector<PointPair> pairs;
    for (double r : {0.3, 1.0, 2.5}) {
      Point x, y;
      x[0] = 0.1;
      y[0] = 0.1 + r / std::sqrt(static_cast<double>(d));
      for (std::size_t i = 1; i < static_cast<std::size_t>(d); ++i) y[i] = r / std::sqrt(static_cast<double>(d));
      pairs.emplace_back(x, y);
    }
    for (auto [a, b] : ab) bm_worst = std::max(bm_worst, check_resolvent(bm, a, b, pairs, 1e-6).value);
  }
  return {chain_worst <= 1e-10 && bm_worst <= 1e-6,
          fmt("chains max %.2e", chain_worst) + fmt(", BM d=1..3 max %.2e", bm_worst)};
}

// 2. mu_moment against raw permutations / rotation multiplicity
double brute_mu(const FiniteChainModel& chain, const std::vector<Vector>& f) {
  const Matrix g = -chain.generator();
  Matrix u = g.fullPivLu().inverse();
  for (Eigen::Index y = 0; y < u.cols(); ++y) u.col(y) /= chain.m()[y];
  const std::size_t n = chain.size(), k = f.size();
  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  double total = 0.0;
  do {
    std::vector<std::size_t> x(k, 0);
    while (true) {
      double term = 1.0;
      for (std::size_t j = 0; j < k; ++j) {
        const auto a = static_cast<Eigen::Index>(x[j]), b = static_cast<Eigen::Index>(x[(j + 1) % k]);
        term *= u(a, b) * f[static_cast<std::size_t>(perm[j])][a] * chain.m()[a];
      }
      total += term;
      std::size_t pos = 0;
      while (pos < k && ++x[pos] == n) x[pos++] = 0;
      if (pos == k) break;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return total / static_cast<double>(k);
}

Outcome moment_oracle() {
  std::mt19937_64 rng(202);
  double worst = 0.0;
  int cases = 0;
  for (int trial = 0; trial < 8; ++trial) {
    const auto chain = random_chain(rng, 2 + static_cast<std::size_t>(trial % 4));
    for (std::size_t k = 2; k <= 4; ++k) {
      std::vector<Vector> f;
      std::vector<TestFunction> tf;
      for (std::size_t j = 0; j < k; ++j) {
        f.push_back(random_vector(rng, chain.size(), 0.0, 1.0));
        tf.push_back(TestFunction::on_states(f.back()));
      }
      const double oracle = brute_mu(chain, f);
      const double got = mu_moment(Model(chain), tf).value;
      worst = std::max(worst, std::abs(got - oracle) / std::max(1.0, oracle));
      ++cases;
    }
  }
  return {worst <= 1e-12, std::to_string(cases) + " cases, max relative error " + fmt("%.2e", worst)};
}

// 3. Monte Carlo against the moment engine
Outcome monte_carlo() {
  const auto chain = two_state_chain();
  const Model model(chain);
  const LoopSampler sampler(chain);
  const Vector a = indicator(0, 2), b = indicator(1, 2);
  auto tf = [](const Vector& v) { return TestFunction::on_states(v); };
  const std::vector<LoopFunctional> mu_fs{
      [=](const LoopPath& p) { return occupation_product(p, {a, b}); },
      [=](const LoopPath& p) { return occupation_product(p, {a, a, b}); }};
  const std::vector<double> mu_exact{mu_moment(model, {tf(a), tf(b)}).value, mu_moment(model, {tf(a), tf(a), tf(b)}).value};
  const std::vector<LoopFunctional> nu_fs{
      [=](const LoopPath& p) { return std::exp(-p.lifetime) * p.occupation(a); },
      [=](const LoopPath& p) { return std::exp(-0.5 * p.lifetime) * occupation_product(p, {a, b}); }};
  const std::vector<double> nu_exact{nu_moment(model, {tf(a)}, 1.0).value, nu_moment(model, {tf(a), tf(b)}, 0.5).value};

  std::vector<int> hits(4, 0);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const McOptions mc{100000, seed, workers()};
    const auto mu = estimate_functionals(sampler, LoopMeasure::mu, mu_fs, mc);
    const auto nu = estimate_functionals(sampler, LoopMeasure::nu, nu_fs, mc);
    for (std::size_t i = 0; i < 2; ++i) {
      hits[i] += std::abs(mu.estimates[i].mean - mu_exact[i]) < 3.0 * mu.estimates[i].std_error;
      hits[2 + i] += std::abs(nu.estimates[i].mean - nu_exact[i]) < 3.0 * nu.estimates[i].std_error;
    }
  }
  const bool pass = *std::min_element(hits.begin(), hits.end()) >= 19;
  std::ostringstream d;
  d << "within 3 SE out of 20 seeds: mu(1a,1b) " << hits[0] << ", mu(1a,1a,1b) " << hits[1] << ", nu k=1 alpha=1 "
    << hits[2] << ", nu(1a,1b) alpha=0.5 " << hits[3];
  return {pass, d.str()};
}

// 4. subordinated potential = Laplace transform of the subordinated semigroup; domination
Outcome subordination_exactness() {
  std::mt19937_64 rng(404);
  const std::vector<FiniteChainModel> chains{two_state_chain(), asymmetric_three_state_chain(), random_chain(rng, 4)};
  double worst = 0.0;
  bool dominated = true;
  int pairs = 0;
  for (const auto& chain : chains) {
    std::vector<std::pair<State, State>> sample;
    for (std::size_t x = 0; x < chain.size(); ++x) {
      for (std::size_t y = 0; y < chain.size(); ++y) sample.emplace_back(State{x}, State{y});
    }
    for (double n : {1.0, 4.0, 16.0}) {
      for (double alpha : {0.5, 1.0, 2.0}) {
        const Matrix numeric = subordinated_laplace_transform(chain, n, alpha);
        Matrix direct(numeric.rows(), numeric.cols());
        for (Eigen::Index x = 0; x < direct.rows(); ++x) {
          for (Eigen::Index y = 0; y < direct.cols(); ++y) {
            direct(x, y) = subordinated_potential(Model(chain), n, alpha, State{static_cast<std::size_t>(x)},
                                                  State{static_cast<std::size_t>(y)});
          }
        }
        worst = std::max(worst, (numeric - direct).cwiseAbs().maxCoeff() / direct.cwiseAbs().maxCoeff());
        const auto dom = check_domination(Model(chain), n, alpha, sample);
        dominated = dominated && dom.pass;
        pairs += static_cast<int>(sample.size() - chain.size());
      }
    }
  }
  for (int d = 1; d <= 3; ++d) {
    const KilledBrownianModel bm(d, 1.0);
    std::vector<std::pair<State, State>> sample;
    for (double r : {0.1, 0.5, 1.0, 3.0}) {
      Point x, y;
      y[0] = r;
      sample.emplace_back(State{x}, State{y});
    }
    for (double n : {1.0, 4.0, 16.0}) {
      for (double alpha : {0.5, 1.0, 2.0}) {
        dominated = dominated && check_domination(Model(bm), n, alpha, sample).pass;
        pairs += static_cast<int>(sample.size());
      }
    }
  }
  return {worst <= 1e-8 && dominated, fmt("max relative gap %.2e", worst) + ", domination " +
                                           (dominated ? "holds" : "FAILS") + " on " + std::to_string(pairs) + " pairs"};
}

// 5. convergence along doubling n
Outcome convergence() {
  const auto chain = two_state_chain();
  LaplaceSpec spec;
  spec.functions = {TestFunction::state_indicator(0, 2), TestFunction::state_indicator(1, 2)};
  spec.alpha = 0.25;
  spec.rates = {0.25, 0.25};
  std::vector<double> ns;
  for (double n = 1.0; n <= 256.0; n *= 2.0) ns.push_back(n);
  const auto table = convergence_table(Model(chain), spec, ns);
  const double rel = table.rows.back().deviation / table.limit;
  return {table.monotone && rel < 0.01,
          std::string(table.monotone ? "monotone" : "NOT monotone") + fmt(", deviation at n=256 is %.3f%% of the limit", 100.0 * rel)};
}

// 6. rotation invariance and the broken-rotation mutant
Outcome invariance() {
  const LoopSampler sampler(fast_asymmetric_chain());
  const Vector a = indicator(0, 3), b = indicator(1, 3), c = indicator(2, 3);
  Vector g(3);
  g << 0.5, 0.0, 1.0;
  struct Case {
    const char* name;
    std::vector<Vector> f;
    std::vector<double> t;
    double r;
  };
  const std::vector<Case> cases{{"1c t=0.1 r=0.5", {c}, {0.1}, 0.5},
                                {"(1b,g) t=(.05,.1) r=0.3", {b, g}, {0.05, 0.1}, 0.3},
                                {"(1a,1b,1c) t=(.02,.06,.1) r=0.25", {a, b, c}, {0.02, 0.06, 0.1}, 0.25},
                                {"(1a,1a) t=(.05,.15) r=1", {a, a}, {0.05, 0.15}, 1.0}};
  bool pass = true;
  std::ostringstream d;
  for (const auto& k : cases) {
    InvarianceConfig cfg;
    cfg.functions = k.f;
    cfg.times = k.t;
    cfg.shift = k.r;
    cfg.mc = McOptions{100000, 42, workers()};
    const auto rep = invariance_test(sampler, cfg);
    pass = pass && rep.pass;
    d << k.name << fmt(" z=%.2f; ", rep.z_score);
  }
  InvarianceConfig mutant;
  mutant.functions = {a, a};
  mutant.times = {0.05, 0.15};
  mutant.shift = 1.0;
  mutant.broken_rotation = true;
  mutant.mc = McOptions{100000, 42, workers()};
  const auto rep = invariance_test(sampler, mutant);
  pass = pass && std::abs(rep.z_score) > 5.0;
  d << fmt("mutant z=%.2f", rep.z_score);
  return {pass, d.str()};
}

// 7. pathwise identities on sampled loops
Outcome pathwise() {
  const LoopSampler two(two_state_chain()), three(asymmetric_three_state_chain());
  Rng rng(707);
  double p4 = 0.0, split = 0.0;
  const std::vector<Vector> f{Vector::LinSpaced(3, 0.2, 1.0), Vector::LinSpaced(3, 1.5, 0.1), Vector::Constant(3, 0.6),
                              Vector::LinSpaced(3, 0.9, 0.3)};
  for (int i = 0; i < 1000; ++i) {
    const LoopPath p = two.sample_nu(rng).path;
    for (double alpha : {0.1, 1.0, 5.0}) {
      const auto r = occupation_laplace(p, Vector::LinSpaced(2, 0.5, 2.0), alpha);
      p4 = std::max(p4, std::abs(r.periodic - r.periodic_direct) / r.periodic);
    }
    const LoopPath q = three.sample_nu(rng).path;
    for (int k = 2; k <= 4; ++k) {
      const std::vector<Vector> fk(f.begin(), f.begin() + k);
      double sum = 0.0;
      for (const auto& perm : enumerate_regime(Regime::cyclic_classes, k)) {
        std::vector<Vector> ordered;
        for (int j : perm) ordered.push_back(fk[static_cast<std::size_t>(j)]);
        sum += multiple_integral(q, ordered);
      }
      const double product = occupation_product(q, fk);
      split = std::max(split, std::abs(sum - product) / std::max(product, 1e-300));
    }
  }
  return {p4 <= 1e-12 && split <= 1e-10, fmt("periodic Laplace identity max %.2e", p4) +
                                             fmt(", cyclic-class split max %.2e (1000 loops each)", split)};
}

// 8. CAF reduction, Revuz formula, duality, h-transform scaling
Outcome revuz_suite() {
  std::mt19937_64 rng(808);
  double reduction = 0.0, revuz = 0.0, duality = 0.0;
  for (int trial = 0; trial < 30; ++trial) {
    const auto chain = random_chain(rng, 2 + static_cast<std::size_t>(trial % 5));
    const std::size_t n = chain.size();
    const int k = 2 + trial % 3;
    std::vector<RevuzMeasure> nus;
    std::vector<TestFunction> fs;
    for (int j = 0; j < k; ++j) {
      const Vector g = random_vector(rng, n, 0.0, 1.0);
      nus.push_back(RevuzMeasure::from_density(chain, g));
      fs.push_back(TestFunction::on_states(g));
    }
    const double mu = mu_moment(Model(chain), fs).value;
    reduction = std::max(reduction, std::abs(caf_mu_moment(chain, nus) - mu) / mu);
    const Vector f = random_vector(rng, n, -1.0, 1.0), g = random_vector(rng, n, -1.0, 1.0);
    revuz = std::max(revuz, revuz_residual(chain, RevuzMeasure::from_atoms(random_vector(rng, n, 0.0, 1.0)), f, g));
    duality = std::max(duality, duality_residual(chain, f, g));
  }
  const auto chain = asymmetric_three_state_chain();
  const LoopSampler sampler(chain);
  const auto nu = RevuzMeasure::from_atoms(Vector::LinSpaced(3, 0.2, 1.4));
  const Vector f = Vector::LinSpaced(3, 1.0, 0.3);
  const Vector density = nu.density(chain).cwiseProduct(f);
  int within = 0;
  for (std::size_t z = 0; z < 3; ++z) {
    Rng zr(stream_seed(808, z));
    double s = 0.0, s2 = 0.0;
    const int samples = 100000;
    for (int i = 0; i < samples; ++i) {
      const double v = sampler.sample_qzz(z, zr).occupation(density);
      s += v;
      s2 += v * v;
    }
    const double mean = s / samples, se = std::sqrt((s2 / samples - mean * mean) / samples);
    within += std::abs(mean - htransform_caf_potential(chain, z, nu, f)[static_cast<Eigen::Index>(z)]) < 3.0 * se;
  }
  const bool pass = reduction <= 1e-14 && revuz <= 1e-12 && duality <= 1e-12 && within == 3;
  return {pass, fmt("reduction %.1e", reduction) + fmt(", Revuz %.1e", revuz) + fmt(", duality %.1e", duality) +
                    ", h-transform MC within 3 SE at " + std::to_string(within) + "/3 roots"};
}

// 9. fin1 dimension claim
Outcome fin1_claim() {
  const auto d3 = check_fin1(KilledBrownianModel(3, 1.0), Box::cube(3, 0.0, 1.0));
  const auto d4 = check_fin1(PowerLawProfile{4, 2.0}, Box::cube(4, 0.0, 1.0));
  return {d3.finite && !d4.finite, std::string("d=3 ") + (d3.finite ? "finite" : "infinite") + ", d=4 profile " +
                                       (d4.finite ? "finite" : "infinite")};
}

// 10. simulate is byte-reproducible
Outcome reproducible() {
  const std::filesystem::path dir = std::filesystem::temp_directory_path() / "loopkit_acceptance";
  std::filesystem::create_directories(dir);
  const std::string data = LOOPKIT_SOURCE_DIR "/data/";
  auto run = [&](const std::string& out, std::uint64_t seed, int threads) {
    const std::string cmd = std::string("\"") + LOOPKIT_CLI + "\" simulate --model " + data + "models/two_state.json --spec " +
                            data + "specs/two_state_moments.json --seed " + std::to_string(seed) +
                            " --samples 100000 --threads " + std::to_string(threads) + " --no-timestamp --out " +
                            (dir / out).string();
    return std::system(cmd.c_str());
  };
  auto slurp = [&](const std::string& name) {
    std::ifstream in(dir / name, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const int e1 = run("a.csv", 42, 4), e2 = run("b.csv", 42, 4), e3 = run("c.csv", 42, 1);
  const std::string a = slurp("a.csv"), b = slurp("b.csv"), c = slurp("c.csv");
  const bool pass = e1 == 0 && e2 == 0 && e3 == 0 && !a.empty() && a == b;
  std::string d = a == b ? "identical (" + std::to_string(a.size()) + " bytes)" : "outputs DIFFER";
  d += a == c ? ", also identical with 1 thread" : ", differs with 1 thread";
  return {pass, d};
}

}  // namespace

int main() {
  struct Criterion {
    const char* title;
    double budget;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"resolvent identity", 10, resolvent_identity},
      {"mu-moment vs raw-permutation oracle", 5, moment_oracle},
      {"Monte Carlo vs analytic moments", 60, monte_carlo},
      {"subordinated potential exactness", 30, subordination_exactness},
      {"subordination convergence", 10, convergence},
      {"rotation invariance and mutant", 120, invariance},
      {"pathwise loop identities", 10, pathwise},
      {"CAF reduction and Revuz suite", 60, revuz_suite},
      {"fin1 dimension verdicts", 5, fin1_claim},
      {"simulate reproducibility", 60, reproducible},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool ok = o.pass && secs < criteria[i].budget;
    failed += !ok;
    std::printf("[%s] %2zu %-38s %6.2fs/%3.0fs  %s\n", ok ? "PASS" : "FAIL", i + 1, criteria[i].title, secs,
                criteria[i].budget, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
