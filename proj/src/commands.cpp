#include "loopkit/commands.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"
#include "loopkit/assumptions.hpp"
#include "loopkit/errors.hpp"
#include "loopkit/io.hpp"
#include "loopkit/loops.hpp"
#include "loopkit/moments.hpp"
#include "loopkit/revuz.hpp"
#include "loopkit/subordination.hpp"

namespace loopkit {
namespace {

constexpr double kZThreshold = 3.0;

Report start(const std::string& command, const RunConfig& config) {
  Report r;
  r.command = command;
  r.seed = config.seed;
  r.meta.emplace_back("model", config.model_path);
  if (!config.spec_path.empty()) r.meta.emplace_back("spec", config.spec_path);
  return r;
}

void add_check(Report& r, const CheckReport& c) {
  r.rows.push_back({c.name, c.value, c.tolerance, c.pass, c.detail});
  r.pass = r.pass && c.pass;
}

void add_verdict(Report& r, const std::string& name, const FiniteVerdict& v) {
  add_check(r, CheckReport{name, v.value, 0.0, v.finite, v.detail});
}

const FiniteChainModel& require_chain(const Model& model, const char* command) {
  const auto* chain = std::get_if<FiniteChainModel>(&model);
  if (!chain) throw Error(ErrorCode::InvalidArgument, std::string(command) + " needs a finite_chain model");
  return *chain;
}

std::vector<Vector> state_vectors(const std::vector<TestFunction>& fs) {
  std::vector<Vector> out;
  for (const auto& f : fs) out.push_back(f.values());
  return out;
}

void check_chain(Report& r, const ModelFile& file) {
  const auto& chain = std::get<FiniteChainModel>(file.model);
  const std::size_t n = chain.size();
  std::vector<IndexPair> pairs;
  std::vector<std::pair<State, State>> state_pairs;
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = 0; y < n; ++y) {
      if (x == y) continue;
      pairs.emplace_back(x, y);
      state_pairs.emplace_back(State{x}, State{y});
    }
  }
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;

  if (!pairs.empty()) {
    for (auto [a, b] : {std::pair{0.0, 1.0}, {0.5, 2.0}, {1.0, 0.25}}) {
      auto c = check_resolvent(chain, a, b, pairs, 1e-10);
      c.name = "resolvent(" + format_number(a) + "," + format_number(b) + ")";
      add_check(r, c);
    }
  }
  for (double a : {0.0, 1.0}) {
    auto c = check_generator_identity(chain, a, 1e-10);
    c.name = "generator_identity(" + format_number(a) + ")";
    add_check(r, c);
  }
  add_check(r, check_excessive_kernel(chain, {0.1, 1.0, 10.0}, 1e-10));
  add_check(r, check_excessive_measure(chain, {0.1, 1.0, 10.0}, 1e-10));
  add_check(r, check_alpha_monotone(chain, {0.0, 0.5, 1.0, 2.0, 4.0}));
  add_check(r, check_off_diagonal_positive(chain));
  add_check(r, check_vanishing(chain, 1e-3));
  add_verdict(r, "fin1", check_fin1(chain, all));
  add_verdict(r, "fin2", check_fin2(chain, 1.0, {0}, {0}));
  add_verdict(r, "condition_04", check_04(chain, 1.0, all));

  double worst = 0.0;
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = 0; y < n; ++y) {
      worst = std::max(worst, derivative_identity_residual(file.model, 1.0, State{x}, State{y}, 1e-4));
    }
  }
  add_check(r, CheckReport{"derivative_identity", worst, 1e-6, worst <= 1e-6, "central difference, h = 1e-4"});
  if (!state_pairs.empty()) {
    auto c = check_domination(file.model, 4.0, 1.0, state_pairs);
    c.name = "domination(n=4,alpha=1)";
    add_check(r, c);
  }

  // Revuz formula and duality on fixed test vectors
  Vector f(static_cast<Eigen::Index>(n)), g(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    f[i] = 1.0 + static_cast<double>(i);
    g[i] = 1.0 / (1.0 + static_cast<double>(i));
  }
  const double d = duality_residual(chain, f, g);
  add_check(r, CheckReport{"duality", d, 1e-10, d <= 1e-10, ""});
  for (const auto& nu : file.revuz) {
    const double v = revuz_residual(chain, nu, f, g);
    add_check(r, CheckReport{"revuz_formula(" + nu.name + ")", v, 1e-10, v <= 1e-10, ""});
  }
}

void check_bm(Report& r, const ModelFile& file) {
  const auto& bm = std::get<KilledBrownianModel>(file.model);
  const int d = bm.dim();
  std::vector<PointPair> pairs;
  for (double dist : {0.5, 1.0, 2.0}) {
    Point x, y;
    y[0] = dist;
    if (d > 1) y[1] = 0.25 * dist;
    pairs.emplace_back(x, y);
  }
  for (auto [a, b] : {std::pair{0.0, 1.0}, {0.5, 2.0}, {1.0, 0.25}}) {
    auto c = check_resolvent(bm, a, b, pairs, 1e-6);
    c.name = "resolvent(" + format_number(a) + "," + format_number(b) + ")";
    add_check(r, c);
  }
  const Box& compact = bm.box();
  Box neighbourhood = compact;
  for (int i = 0; i < d; ++i) {
    neighbourhood.lo[static_cast<std::size_t>(i)] -= 1.0;
    neighbourhood.hi[static_cast<std::size_t>(i)] += 1.0;
  }
  add_verdict(r, "fin1", check_fin1(bm, compact));
  add_verdict(r, "fin2", check_fin2(bm, 1.0, compact, neighbourhood));
  add_verdict(r, "condition_04", check_04(bm, 1.0, compact));
  double worst = 0.0;
  for (const auto& [x, y] : pairs) {
    worst = std::max(worst, derivative_identity_residual(file.model, 1.0, State{x}, State{y}, 1e-4));
  }
  add_check(r, CheckReport{"derivative_identity", worst, 1e-6, worst <= 1e-6, "central difference, h = 1e-4"});
  std::vector<std::pair<State, State>> state_pairs;
  for (const auto& [x, y] : pairs) state_pairs.emplace_back(State{x}, State{y});
  auto c = check_domination(file.model, 4.0, 1.0, state_pairs);
  c.name = "domination(n=4,alpha=1)";
  add_check(r, c);
}

void dump_loops(const LoopSampler& sampler, LoopMeasure measure, const RunConfig& config, const std::string& tag,
                nlohmann::ordered_json& out) {
  // Same streams as estimate_functionals, so these are the first loops it used.
  constexpr std::size_t kChunk = 4096;
  const std::size_t count = std::min(config.dump_limit, config.samples);
  const auto& ids = sampler.chain().state_ids();
  Rng rng;
  for (std::size_t i = 0; i < count; ++i) {
    if (i % kChunk == 0) rng.seed(stream_seed(config.seed, i / kChunk));
    const WeightedLoop w = measure == LoopMeasure::mu ? sampler.sample_mu(rng) : sampler.sample_nu(rng);
    nlohmann::ordered_json rec;
    rec["measure"] = tag;
    rec["index"] = i;
    rec["root"] = ids[w.path.root];
    rec["lifetime"] = w.path.lifetime;
    rec["weight"] = w.weight;
    rec["times"] = w.path.times;
    auto states = nlohmann::ordered_json::array();
    for (std::size_t s : w.path.states) states.push_back(ids[s]);
    rec["states"] = states;
    out.push_back(rec);
  }
}

}  // namespace

Report cmd_check(const RunConfig& config) {
  const ModelFile file = load_model(config.model_path);
  Report r = start("check", config);
  r.columns = {"check", "value", "tolerance", "pass", "detail"};
  if (std::holds_alternative<FiniteChainModel>(file.model)) {
    check_chain(r, file);
  } else {
    check_bm(r, file);
  }
  return r;
}

Report cmd_moments(const RunConfig& config) {
  const ModelFile file = load_model(config.model_path);
  const SpecFile specs = load_spec(config.spec_path, file.model);
  Report r = start("moments", config);
  r.columns = {"spec", "regime", "k", "alpha", "value", "error_estimate"};
  for (const auto& s : specs.specs) {
    const double alpha = config.alpha.value_or(s.alpha);
    std::string regime;
    MomentValue v;
    if (s.root) {
      const bool ordered = s.regime == Regime::cyclic_translations;
      regime = ordered ? "rooted_ordered" : "rooted_full";
      v = qzz_moment(file.model, *s.root, s.functions, alpha, ordered);
    } else if (alpha > 0.0) {
      regime = "full";
      v = nu_moment(file.model, s.functions, alpha);
    } else {
      regime = std::string(to_string(s.regime));
      try {
        v = mu_moment(file.model, s.functions, s.regime);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::InfiniteMoment) throw;
        v.value = kInfinity;
      }
    }
    r.rows.push_back({s.id, regime, static_cast<std::int64_t>(s.functions.size()), alpha, v.value, v.error_estimate});
  }
  return r;
}

Report cmd_simulate(const RunConfig& config) {
  const ModelFile file = load_model(config.model_path);
  const auto& chain = require_chain(file.model, "simulate");
  const SpecFile specs = load_spec(config.spec_path, file.model);
  const LoopSampler sampler(chain);
  const McOptions mc{config.samples, config.seed, config.threads};

  struct Item {
    const FunctionalSpec* spec;
    double alpha;
    double analytic;
    std::size_t slot;
  };
  std::vector<Item> items;
  std::vector<LoopFunctional> mu_fs, nu_fs;
  for (const auto& s : specs.specs) {
    if (s.root) throw Error(ErrorCode::InvalidArgument, "simulate estimates mu and nu moments; drop \"root\" from " + s.id);
    const double alpha = config.alpha.value_or(s.alpha);
    const auto f = state_vectors(s.functions);
    const double k = static_cast<double>(f.size());
    if (alpha > 0.0) {
      const double analytic = nu_moment(file.model, s.functions, alpha).value;
      nu_fs.push_back([f, alpha](const LoopPath& p) { return std::exp(-alpha * p.lifetime) * occupation_product(p, f); });
      items.push_back({&s, alpha, analytic, nu_fs.size() - 1});
      continue;
    }
    const double analytic = mu_moment(file.model, s.functions, s.regime).value;
    switch (s.regime) {
      case Regime::cyclic_classes:
        mu_fs.push_back([f](const LoopPath& p) { return occupation_product(p, f); });
        break;
      case Regime::cyclic_translations:
        mu_fs.push_back([f](const LoopPath& p) { return multiple_integral(p, f); });
        break;
      case Regime::full:
        // every cyclic class is counted k times
        mu_fs.push_back([f, k](const LoopPath& p) { return k * occupation_product(p, f); });
        break;
    }
    items.push_back({&s, 0.0, analytic, mu_fs.size() - 1});
  }
  McResult mu_res, nu_res;
  if (!mu_fs.empty()) mu_res = estimate_functionals(sampler, LoopMeasure::mu, mu_fs, mc);
  if (!nu_fs.empty()) nu_res = estimate_functionals(sampler, LoopMeasure::nu, nu_fs, mc);

  Report r = start("simulate", config);
  r.meta.emplace_back("samples", std::to_string(config.samples));
  r.meta.emplace_back("threshold", format_number(kZThreshold));
  r.columns = {"functional", "measure", "estimate", "stderr", "analytic", "zscore", "verdict"};
  for (const auto& it : items) {
    const bool nu = it.alpha > 0.0;
    const Estimate& e = (nu ? nu_res : mu_res).estimates[it.slot];
    const double z = e.std_error > 0.0 ? (e.mean - it.analytic) / e.std_error : (e.mean == it.analytic ? 0.0 : kInfinity);
    const bool pass = std::abs(z) < kZThreshold;
    r.pass = r.pass && pass;
    r.rows.push_back({it.spec->id, std::string(nu ? "nu" : "mu"), e.mean, e.std_error, it.analytic, z,
                      std::string(pass ? "pass" : "fail")});
  }

  if (!config.dump_loops.empty()) {
    auto records = nlohmann::ordered_json::array();
    if (!mu_fs.empty()) dump_loops(sampler, LoopMeasure::mu, config, "mu", records);
    if (!nu_fs.empty()) dump_loops(sampler, LoopMeasure::nu, config, "nu", records);
    std::ofstream out(config.dump_loops, std::ios::binary);
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + config.dump_loops);
    out << records.dump() << '\n';
  }
  return r;
}

Report cmd_subordination(const RunConfig& config) {
  const ModelFile file = load_model(config.model_path);
  const SpecFile specs = load_spec(config.spec_path, file.model);
  std::vector<double> n_list = !config.n_list.empty() ? config.n_list : specs.n_list;
  if (n_list.empty()) {
    for (double n = 1.0; n <= 256.0; n *= 2.0) n_list.push_back(n);
  }
  Report r = start("subordination", config);
  std::string ns;
  for (double n : n_list) ns += (ns.empty() ? "" : " ") + format_number(n);
  r.meta.emplace_back("n_list", ns);
  r.columns = {"spec", "n", "value", "error_estimate", "deviation"};
  for (const auto& s : specs.specs) {
    LaplaceSpec spec;
    spec.functions = s.functions;
    spec.alpha = config.alpha.value_or(s.alpha);
    // without explicit rates every time is discounted at alpha
    spec.rates = s.rates.empty() ? std::vector<double>(s.functions.size(), spec.alpha) : s.rates;
    const ConvergenceTable t = convergence_table(file.model, spec, n_list);
    for (const auto& row : t.rows) r.rows.push_back({s.id, format_number(row.n), row.value, row.error_estimate, row.deviation});
    r.rows.push_back({s.id, std::string("inf"), t.limit, t.limit_error, 0.0});
    r.meta.emplace_back(s.id + ".monotone", t.monotone ? "true" : "false");
    r.pass = r.pass && t.monotone;
  }
  return r;
}

Report cmd_invariance(const RunConfig& config) {
  const ModelFile file = load_model(config.model_path);
  const auto& chain = require_chain(file.model, "invariance");
  const SpecFile specs = load_spec(config.spec_path, file.model);
  const LoopSampler sampler(chain);
  Report r = start("invariance", config);
  r.meta.emplace_back("samples", std::to_string(config.samples));
  r.meta.emplace_back("threshold", format_number(kZThreshold));
  r.columns = {"functional", "shift", "shifted", "unshifted", "difference", "stderr", "zscore", "analytic", "verdict"};
  for (const auto& s : specs.specs) {
    if (s.times.empty()) throw Error(ErrorCode::InvalidArgument, "invariance needs \"times\" in " + s.id);
    InvarianceConfig ic;
    ic.functions = state_vectors(s.functions);
    ic.times = s.times;
    ic.shift = s.shift;
    ic.threshold = kZThreshold;
    ic.broken_rotation = s.broken_rotation;
    ic.mc = McOptions{config.samples, config.seed, config.threads};
    const InvarianceReport rep = invariance_test(sampler, ic);
    r.pass = r.pass && rep.pass;
    r.rows.push_back({s.id, s.shift, rep.shifted.mean, rep.unshifted.mean, rep.difference.mean, rep.difference.std_error,
                      rep.z_score, rep.analytic_unshifted, std::string(rep.pass ? "pass" : "fail")});
  }
  return r;
}

}  // namespace loopkit
